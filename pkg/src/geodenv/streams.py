"""Deterministic, stream-keyed random number generation.

Every stochastic routine in this package draws from a generator keyed by a
:class:`StreamKey` ``(seed, replica, label)``.  Keys are hashed into 128-bit
Philox keys, so distinct keys give statistically independent counter-based
streams and identical keys reproduce bit-identical output regardless of what
other streams were consumed in between.  Replica farms hand one key per
replica to each worker; generators are never shared.

Exponential variates are produced by inverting the CDF on a 53-bit uniform
(``-log1p(-U) / rate``) rather than through a rejection sampler, so the
survival function is exact to float64 and the number of uniforms consumed per
variate is fixed (one), which keeps counter arithmetic predictable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_U64 = 2**64
_BLOCK = 4  # Philox-4x64 emits four 64-bit words per counter increment


@dataclass(frozen=True)
class StreamKey:
    """Identifies one independent random stream.

    seed:    64-bit experiment seed (CLI ``--seed``, decimal or hex).
    replica: 32-bit replica index within an experiment.
    label:   short tag naming the consumer, e.g. ``"weights"`` or ``"tasep"``.
    """

    seed: int
    replica: int = 0
    label: str = ""

    def __post_init__(self):
        if not (-(2**63) <= self.seed < 2**64):
            raise ParameterError(f"seed out of 64-bit range: {self.seed}")
        if not (0 <= self.replica < 2**32):
            raise ParameterError(f"replica out of 32-bit range: {self.replica}")

    def child(self, suffix: str) -> "StreamKey":
        """Derive a sub-stream key; children with distinct suffixes are independent."""
        sep = "/" if self.label else ""
        return StreamKey(self.seed, self.replica, f"{self.label}{sep}{suffix}")

    def with_replica(self, replica: int) -> "StreamKey":
        return StreamKey(self.seed, replica, self.label)


def philox_key(key: StreamKey) -> int:
    """Hash a StreamKey into a 128-bit Philox key."""
    payload = b"%d|%d|" % (key.seed % _U64, key.replica) + key.label.encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:16], "little")


def generator(key: StreamKey) -> np.random.Generator:
    """Fresh Generator for a key.  Same key, same sequence."""
    return np.random.Generator(np.random.Philox(key=philox_key(key)))


def generator_at(key: StreamKey, offset: int) -> tuple[np.random.Generator, int]:
    """Generator positioned so the next draws cover 64-bit words ``offset`` onward.

    Philox advances in 4-word blocks, so the stream is wound to the enclosing
    block boundary; the returned ``skip`` (< 4) is the number of leading words
    the caller must discard.  Only valid when every draw from this stream
    consumes exactly one word (true for ``Generator.random(dtype=float64)``).
    """
    if offset < 0:
        raise ParameterError("offset must be nonnegative")
    bg = np.random.Philox(key=philox_key(key))
    blocks, skip = divmod(offset, _BLOCK)
    if blocks:
        bg.advance(blocks)
    return np.random.Generator(bg), skip


def sample_exponential(gen: np.random.Generator, rate: float, size=None):
    """Exp(rate) variates via inverse CDF; survival is exactly ``exp(-rate*x)``."""
    if not rate > 0:
        raise ParameterError(f"rate must be positive, got {rate}")
    u = gen.random(size)
    return -np.log1p(-u) / rate


def sample_bernoulli(gen: np.random.Generator, p: float, size=None):
    """Bernoulli(p) bits as int8."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    u = gen.random(size)
    if size is None:
        return np.int8(u < p)
    return (u < p).astype(np.int8)


def exponential_slice(key: StreamKey, rate: float, start: int, count: int):
    """Exp(rate) values at word indices [start, start+count) of ``key``'s stream.

    Random access into a stream: re-reads the same values that a sequential
    pass over the stream would produce, which lets large fields be regenerated
    window-by-window instead of stored.
    """
    gen, skip = generator_at(key, start)
    u = gen.random(skip + count)[skip:]
    return -np.log1p(-u) / rate


def parse_seed(text: str) -> int:
    """Parse a CLI seed given in decimal or hex (0x-prefixed or bare hex)."""
    t = text.strip().lower()
    try:
        return int(t, 0)
    except ValueError:
        pass
    try:
        return int(t, 16)
    except ValueError:
        raise ParameterError(f"seed must be decimal or hex, got {text!r}") from None
