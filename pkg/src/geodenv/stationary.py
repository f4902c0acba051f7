"""Samplers for the stationary law of the exclusion process seen from the pair.

The construction runs off two independent Bernoulli(rho) driver sequences
Y1, Y2 on the positive half-line: W = cumsum(Y2 - Y1), M = running max of W,
and the reflection set E = {x : M(x) > M(x-1)}.  The three-symbol
configuration sigma copies Y1 except at reflection points, which become
stars; the full line is completed by an independent mirrored copy at density
1 - rho with holes and particles exchanged.  Projecting stars to 0/1 one way
recovers plain product measure; projecting the other way gives the
configuration whose law is stationary for the dynamics seen from an isolated
defect, and replacing the origin star by a hole-particle pair gives the
stationary law of the pair-tracked process.

Everything is vectorised over replicas; single-configuration wrappers return
:class:`StationaryConfig`.  The module also carries the two-component Markov
chain hidden in the right half (counts of the projected and thinned
particles), its four-entry transition rule, an exact brute-force check of the
joint trajectory pmf, and an exact finite-window pmf evaluator used as an
independent reference in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import ParameterError
from .streams import StreamKey, generator, sample_bernoulli

STAR = np.int8(2)

_VARIANTS = ("sigma", "etabar_star", "etabar")


def _check_rho(rho):
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0,1), got {rho}")


@dataclass
class StationaryConfig:
    """Window of {0, 1, *} symbols with its variant tag.

    ``symbols[i]`` is the symbol at site ``site_lo + i``; stars are the
    value :data:`STAR` (2).
    """

    symbols: np.ndarray
    site_lo: int
    variant: str

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}")

    def site(self, x: int) -> int:
        i = x - self.site_lo
        if not 0 <= i < self.symbols.size:
            raise ParameterError(f"site {x} outside window")
        return int(self.symbols[i])

    @property
    def site_hi(self) -> int:
        return self.site_lo + self.symbols.size - 1

    def window(self, lo: int, hi: int) -> np.ndarray:
        i, j = lo - self.site_lo, hi - self.site_lo
        if i < 0 or j >= self.symbols.size:
            raise ParameterError("window outside configuration")
        return self.symbols[i : j + 1].copy()

    def x_plus(self) -> int:
        """First site x >= 1 with symbol 0 (position of the first hole right)."""
        right = self.symbols[1 - self.site_lo :]
        idx = np.flatnonzero(right == 0)
        if idx.size == 0:
            raise ParameterError("no hole found on the right half; enlarge the window")
        return int(idx[0]) + 1

    def x_minus(self) -> int:
        """First site x <= -1 with symbol 1, as a negative number."""
        left = self.symbols[: -self.site_lo][::-1]
        idx = np.flatnonzero(left == 1)
        if idx.size == 0:
            raise ParameterError("no particle found on the left half; enlarge the window")
        return -(int(idx[0]) + 1)


# ---------------------------------------------------------------------------
# drivers and the sigma construction
# ---------------------------------------------------------------------------


def driver_pair(rho: float, length: int, key: StreamKey, count: int = 1):
    """Two independent Bernoulli(rho) driver arrays of shape (count, length)."""
    _check_rho(rho)
    if length < 1:
        raise ParameterError("length must be >= 1")
    g1 = generator(key.child("y1"))
    g2 = generator(key.child("y2"))
    y1 = sample_bernoulli(g1, rho, (count, length))
    y2 = sample_bernoulli(g2, rho, (count, length))
    return y1, y2


def reflection_set(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Mask of reflection points: M(x) > M(x-1) for the walk W = R2 - R1."""
    w = np.cumsum(y2.astype(np.int64) - y1.astype(np.int64), axis=-1)
    m = np.maximum.accumulate(np.maximum(w, 0), axis=-1)
    prev = np.concatenate([np.zeros(m.shape[:-1] + (1,), dtype=m.dtype), m[..., :-1]], axis=-1)
    return m > prev


def sigma_half_from_drivers(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Symbols at sites 1..L: copy Y1, with stars at reflection points."""
    e = reflection_set(y1, y2)
    out = np.where(y1 == 1, np.int8(1), np.where(e, STAR, np.int8(0)))
    return out.astype(np.int8)


def sample_sigma_batch(rho: float, half_length: int, key: StreamKey, count: int) -> np.ndarray:
    """(count, 2*half_length+1) symbol rows for sites -L..L; column L is site 0.

    The right half runs at density rho; the left half is an independent
    density 1-rho copy with holes/particles exchanged and the axis flipped.
    Both halves are exact on the emitted window: symbol x depends only on
    driver values up to |x|, so no truncation bias enters.
    """
    y1, y2 = driver_pair(rho, half_length, key.child("right"), count)
    right = sigma_half_from_drivers(y1, y2)
    ty1, ty2 = driver_pair(1.0 - rho, half_length, key.child("left"), count)
    tilde = sigma_half_from_drivers(ty1, ty2)
    left = np.where(tilde == 1, np.int8(0), np.where(tilde == 0, np.int8(1), STAR)).astype(np.int8)
    out = np.empty((count, 2 * half_length + 1), dtype=np.int8)
    out[:, :half_length] = left[:, ::-1]
    out[:, half_length] = STAR
    out[:, half_length + 1 :] = right
    return out


def sample_sigma(rho: float, half_length: int, key: StreamKey) -> StationaryConfig:
    row = sample_sigma_batch(rho, half_length, key, 1)[0]
    return StationaryConfig(row, -half_length, "sigma")


def project_etabar_star_batch(sigma_rows: np.ndarray, site_lo: int) -> np.ndarray:
    """Stars become particles on positive sites, holes on negative sites."""
    n = sigma_rows.shape[-1]
    sites = site_lo + np.arange(n)
    out = sigma_rows.copy()
    star = sigma_rows == STAR
    out[..., :] = np.where(star & (sites > 0), np.int8(1), out)
    out[..., :] = np.where(star & (sites < 0), np.int8(0), out)
    return out.astype(np.int8)


def project_etabar_star(config: StationaryConfig) -> StationaryConfig:
    if config.variant != "sigma":
        raise ParameterError("projection expects a sigma-variant configuration")
    row = project_etabar_star_batch(config.symbols[None, :], config.site_lo)[0]
    return StationaryConfig(row, config.site_lo, "etabar_star")


def project_bernoulli(config: StationaryConfig) -> StationaryConfig:
    """Opposite projection: stars to holes on the right, particles on the left.

    Off the origin the result is i.i.d. Bernoulli(rho); the origin keeps its
    star.  Together with the other projection this realises the coupling
    whose discrepancies are exactly the non-origin stars.
    """
    if config.variant != "sigma":
        raise ParameterError("projection expects a sigma-variant configuration")
    n = config.symbols.size
    sites = config.site_lo + np.arange(n)
    star = config.symbols == STAR
    out = config.symbols.copy()
    out = np.where(star & (sites > 0), np.int8(0), out)
    out = np.where(star & (sites < 0), np.int8(1), out).astype(np.int8)
    return StationaryConfig(out, config.site_lo, "sigma")


def etabar_from_star_batch(star_rows: np.ndarray, site_lo: int) -> np.ndarray:
    """Replace the origin star by a hole-particle pair at sites 0/1.

    Input rows cover sites [site_lo, -site_lo]; output rows cover
    [site_lo, -site_lo + 1]: left of 0 unchanged, right of 1 shifted by one.
    """
    iz = -site_lo
    count, n = star_rows.shape
    out = np.empty((count, n + 1), dtype=np.int8)
    out[:, :iz] = star_rows[:, :iz]
    out[:, iz] = 0
    out[:, iz + 1] = 1
    out[:, iz + 2 :] = star_rows[:, iz + 1 :]
    return out


def etabar_from_star(config: StationaryConfig) -> StationaryConfig:
    if config.variant != "etabar_star":
        raise ParameterError("expected an etabar_star configuration")
    row = etabar_from_star_batch(config.symbols[None, :], config.site_lo)[0]
    return StationaryConfig(row, config.site_lo, "etabar")


def sample_psi_batch(rho: float, half_length: int, key: StreamKey, count: int) -> np.ndarray:
    """Pair-tracked stationary occupancies on sites [-L, L+1], batched."""
    sig = sample_sigma_batch(rho, half_length, key, count)
    star = project_etabar_star_batch(sig, -half_length)
    return etabar_from_star_batch(star, -half_length)


def sample_psi(rho: float, half_length: int, key: StreamKey) -> StationaryConfig:
    row = sample_psi_batch(rho, half_length, key, 1)[0]
    return StationaryConfig(row, -half_length, "etabar")


def sample_psi_conditioned_batch(
    rho: float, variant: int, half_length: int, key: StreamKey, count: int
) -> np.ndarray:
    """Stationary law conditioned on a pair jump at time zero, batched.

    Variant 1 (the pair has just moved right): sites -1, 0 hold holes and
    site 1 a particle; the right tail fills sites >= 2 from the plain
    stationary right-tail law and the left tail fills sites <= -2.
    Variant 2 (just moved left): site 0 a hole, sites 1, 2 particles; tails
    fill sites >= 3 and <= -1.  Both tails are independent, realised by
    carving one full stationary sample (its halves are independent).

    Returns occupancy rows over sites [-half_length, half_length].
    """
    if variant not in (1, 2):
        raise ParameterError(f"variant must be 1 or 2, got {variant}")
    L = half_length
    full = sample_psi_batch(rho, L + 2, key, count)  # sites [-(L+2), L+3]
    iz = L + 2  # index of site 0 in `full`
    out = np.empty((count, 2 * L + 1), dtype=np.int8)
    sites = np.arange(-L, L + 1)
    if variant == 1:
        # y <= -2 from full(y+1); y >= 2 from full(y)
        for col, y in enumerate(sites):
            if y <= -2:
                out[:, col] = full[:, iz + y + 1]
            elif y == -1 or y == 0:
                out[:, col] = 0
            elif y == 1:
                out[:, col] = 1
            else:
                out[:, col] = full[:, iz + y]
    else:
        for col, y in enumerate(sites):
            if y <= -1:
                out[:, col] = full[:, iz + y]
            elif y == 0:
                out[:, col] = 0
            elif y in (1, 2):
                out[:, col] = 1
            else:
                out[:, col] = full[:, iz + y - 1]
    return out


def sample_psi_conditioned(rho: float, variant: int, half_length: int, key: StreamKey) -> StationaryConfig:
    row = sample_psi_conditioned_batch(rho, variant, half_length, key, 1)[0]
    return StationaryConfig(row, -half_length, "etabar")


# ---------------------------------------------------------------------------
# the two-component counting chain
# ---------------------------------------------------------------------------


def chain_transition_probs(gap: int, rho: float) -> tuple[float, float, float, float]:
    """Probabilities of the four moves from a state with r1 - r2 = gap.

    Order: (both up, first up, second up, stay).  They sum to one exactly in
    exact arithmetic; numerically to 1e-12 (checked).
    """
    _check_rho(rho)
    if gap < 0:
        raise ParameterError("chain state needs r1 >= r2")
    q = rho * (1.0 - rho)
    p_both = rho * rho
    p_first = q * (gap + 2) / (gap + 1)
    p_second = q * gap / (gap + 1)
    p_stay = (1.0 - rho) * (1.0 - rho)
    total = p_both + p_first + p_second + p_stay
    if abs(total - 1.0) > 1e-12:
        raise ParameterError(f"transition row sums to {total}, not 1")
    return p_both, p_first, p_second, p_stay


def chain_step(state: tuple[int, int], rho: float, gen) -> tuple[int, int]:
    """One move of the (R1, R2) chain."""
    r1, r2 = state
    p_both, p_first, p_second, _ = chain_transition_probs(r1 - r2, rho)
    u = float(gen.random())
    if u < p_both:
        return r1 + 1, r2 + 1
    if u < p_both + p_first:
        return r1 + 1, r2
    if u < p_both + p_first + p_second:
        return r1, r2 + 1
    return r1, r2


def chain_simulate_batch(rho: float, steps: int, key: StreamKey, count: int) -> np.ndarray:
    """Vectorised chain endpoints after ``steps`` moves from (0, 0)."""
    _check_rho(rho)
    gen = generator(key)
    r1 = np.zeros(count, dtype=np.int64)
    r2 = np.zeros(count, dtype=np.int64)
    q = rho * (1.0 - rho)
    for _ in range(steps):
        gap = r1 - r2
        u = gen.random(count)
        p_both = rho * rho
        p_first = q * (gap + 2) / (gap + 1)
        p_second = q * gap / (gap + 1)
        both = u < p_both
        first = ~both & (u < p_both + p_first)
        second = ~both & ~first & (u < p_both + p_first + p_second)
        r1 += both + first
        r2 += both + second
    return np.stack([r1, r2], axis=1)


def chain_from_drivers(y1: np.ndarray, y2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The same pair computed deterministically from driver sequences.

    R1 = cumsum(Y1) + E and R2 = cumsum(Y2) - E, with E the reflection count;
    the endpoint law coincides with ``chain_simulate_batch``.
    """
    e = np.cumsum(reflection_set(y1, y2), axis=-1)
    r1 = np.cumsum(y1.astype(np.int64), axis=-1) + e
    r2 = np.cumsum(y2.astype(np.int64), axis=-1) - e
    return r1, r2


@dataclass
class PmfCheckReport:
    """Outcome of the exact joint-pmf enumeration."""

    ok: bool
    events: int
    mismatches: list
    total_mass_one: bool


def joint_pmf_bruteforce(rho, x: int) -> PmfCheckReport:
    """Enumerate all driver pairs of length x and verify the trajectory pmf.

    Every admissible (trajectory, reflection-count) event must carry
    probability rho^(r1+r2) * (1-rho)^(2x - r1 - r2), exactly; computed in
    rational arithmetic, so equality is literal.
    """
    if not 1 <= x <= 8:
        raise ParameterError("enumeration supported for 1 <= x <= 8")
    r = Fraction(rho).limit_denominator(10**9) if not isinstance(rho, Fraction) else rho
    if not 0 < r < 1:
        raise ParameterError("rho must lie in (0,1)")
    acc: dict = {}
    for y1 in product((0, 1), repeat=x):
        p1 = 1
        for bit in y1:
            p1 *= r if bit else (1 - r)
        for y2 in product((0, 1), repeat=x):
            p = p1
            for bit in y2:
                p *= r if bit else (1 - r)
            w = m = e = 0
            s1 = s2 = 0
            traj = []
            for k in range(x):
                w += y2[k] - y1[k]
                if w > m:
                    m = w
                    e += 1
                s1 += y1[k]
                s2 += y2[k]
                traj.append((s1 + e, s2 - e))
            event = (tuple(traj), e)
            acc[event] = acc.get(event, 0) + p
    mismatches = []
    total = 0
    for (traj, e), p in acc.items():
        total += p
        r1x, r2x = traj[-1]
        expect = r**(r1x + r2x) * (1 - r) ** (2 * x - r1x - r2x)
        if p != expect:
            mismatches.append({"trajectory": traj, "reflections": e, "got": p, "expected": expect})
    return PmfCheckReport(
        ok=(not mismatches and total == 1),
        events=len(acc),
        mismatches=mismatches,
        total_mass_one=(total == 1),
    )


def e_count(y1, y2, k):  # pragma: no cover - helper kept for clarity above
    w = m = e = 0
    for i in range(k + 1):
        w += y2[i] - y1[i]
        if w > m:
            m = w
            e += 1
    return e


# ---------------------------------------------------------------------------
# exact finite-window probabilities (independent reference)
# ---------------------------------------------------------------------------


def _half_pattern_prob(bits, rho: float, left: bool) -> float:
    """Exact probability of an occupancy pattern on consecutive half-line sites.

    ``bits[k]`` is the occupancy at site k+1 (right half, ``left=False``) or
    at site -(k+1) (left half).  Sums over the hidden reflection-gap chain of
    the corresponding driver pair, which starts at gap 0.
    """
    if left:
        return _half_pattern_prob([1 - b for b in bits], 1.0 - rho, False)
    q = rho * (1.0 - rho)
    states = {0: 1.0}
    for b in bits:
        nxt: dict[int, float] = {}
        for g, p in states.items():
            if b == 1:
                # (Y1,Y2) = (1,1) rho^2 keeps g; (1,0) q raises g;
                # at g = 0, (0,1) q is a reflection star, projected to 1
                _add(nxt, g, p * rho * rho)
                _add(nxt, g + 1, p * q)
                if g == 0:
                    _add(nxt, 0, p * q)
            else:
                # (0,0) (1-rho)^2 keeps g; (0,1) q lowers g when g > 0
                _add(nxt, g, p * (1.0 - rho) * (1.0 - rho))
                if g > 0:
                    _add(nxt, g - 1, p * q)
        states = nxt
    return float(sum(states.values()))


def _add(d, k, v):
    d[k] = d.get(k, 0.0) + v


def psi_window_pmf(rho: float, lo: int, hi: int) -> np.ndarray:
    """Exact pmf over occupancy patterns of the pair-tracked stationary law.

    Returns probabilities indexed by the pattern code sum(bit_x << (x - lo))
    for sites lo..hi.  Sites 0 and 1 are pinned to hole and particle, so
    patterns violating that carry probability zero.  The two halves are
    independent; right-half sites x >= 2 read the projected construction at
    sites x - 1, left-half sites x <= -1 read the mirrored copy.
    """
    _check_rho(rho)
    if lo > 0 or hi < 1:
        raise ParameterError("window must contain sites 0 and 1")
    width = hi - lo + 1
    out = np.zeros(1 << width, dtype=np.float64)
    left_sites = [x for x in range(lo, 0)]
    right_sites = [x for x in range(2, hi + 1)]
    for code in range(1 << width):
        bits = [(code >> (x - lo)) & 1 for x in range(lo, hi + 1)]
        if bits[0 - lo] != 0 or bits[1 - lo] != 1:
            continue
        pl = 1.0
        if left_sites:
            # left occupancies at -1, -2, ... in half-line order
            lbits = [bits[x - lo] for x in sorted(left_sites, reverse=True)]
            pl = _half_pattern_prob(lbits, rho, left=True)
        pr = 1.0
        if right_sites:
            # right occupancies at sites 2.. correspond to construction sites 1..
            rbits = [bits[x - lo] for x in right_sites]
            pr = _half_pattern_prob(rbits, rho, left=False)
        out[code] = pl * pr
    return out
