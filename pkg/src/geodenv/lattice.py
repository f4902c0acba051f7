"""Finite-geodesic machinery on the lattice.

Weight fields of i.i.d. Exp(1) vertex weights, maximal up-right passage
times by dynamic programming, geodesic backtracking, direction-parametrised
lattice coordinates, and the empirical environment measure collected along a
path (local weight window plus path shape, one sample per path vertex).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import BoundsError, CapacityError, ParameterError
from .streams import StreamKey, generator

# Dense float64 fields above this many cells must go through the streaming
# engines instead; guards against accidental 10-GB allocations.
MAX_DENSE_CELLS = 600_000_000


@dataclass(frozen=True)
class WeightWindow:
    """Origin-anchored rectangle of vertex weights.

    ``weights[i, j]`` is the weight of lattice vertex ``origin + (i, j)``.
    """

    origin: tuple[int, int]
    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.size == 0:
            raise ParameterError("weights must be a nonempty 2-D array")
        if not np.all(w > 0):
            raise ParameterError("weights must be strictly positive")

    @property
    def extent(self) -> tuple[int, int]:
        return self.weights.shape

    def contains(self, v) -> bool:
        i, j = v[0] - self.origin[0], v[1] - self.origin[1]
        na, nb = self.weights.shape
        return 0 <= i < na and 0 <= j < nb

    def index(self, v) -> tuple[int, int]:
        if not self.contains(v):
            raise BoundsError(f"vertex {tuple(v)} outside window at {self.origin} extent {self.extent}")
        return v[0] - self.origin[0], v[1] - self.origin[1]

    def weight(self, v) -> float:
        i, j = self.index(v)
        return float(self.weights[i, j])


class LatticePath:
    """Strictly up-right vertex sequence."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] == 0:
            raise ParameterError("path must be an (n, 2) vertex array")
        steps = np.diff(v, axis=0)
        if steps.size and not np.all((steps >= 0) & (steps.sum(axis=1) == 1)):
            raise ParameterError("consecutive vertices must differ by (1,0) or (0,1)")
        self.vertices = v

    def __len__(self):
        return self.vertices.shape[0]

    def __getitem__(self, k):
        return tuple(self.vertices[k])

    def d(self) -> np.ndarray:
        """Diagonal level a+b along the path (strictly increasing by 1)."""
        return self.vertices.sum(axis=1)

    def ad(self) -> np.ndarray:
        """Anti-diagonal coordinate a-b along the path."""
        return self.vertices[:, 0] - self.vertices[:, 1]


@dataclass
class EnvSample:
    """Local environment around one path vertex.

    ``window[r, c]`` holds the weight at ``center + (r - s, c - s)`` and
    ``pathmask`` marks which of those vertices the path visits.
    """

    center: tuple[int, int]
    window: np.ndarray
    pathmask: np.ndarray


@dataclass
class EmpiricalEnvMeasure:
    """Uniform measure over the environment samples along one path."""

    s: int
    centers: np.ndarray   # (n, 2)
    windows: np.ndarray   # (n, 2s+1, 2s+1)
    pathmasks: np.ndarray  # (n, 2s+1, 2s+1) uint8

    @property
    def normalization(self) -> int:
        return self.centers.shape[0]

    def sample(self, k) -> EnvSample:
        return EnvSample(tuple(self.centers[k]), self.windows[k], self.pathmasks[k])

    def center_weights(self) -> np.ndarray:
        return self.windows[:, self.s, self.s]

    def integrate(self, f) -> float:
        """Average of a bounded window functional f(window, pathmask)."""
        vals = [f(self.windows[k], self.pathmasks[k]) for k in range(self.normalization)]
        return float(np.mean(vals))


def gen_weights(origin, extent, key: StreamKey) -> WeightWindow:
    """I.i.d. Exp(1) weight window, reproducible from the key.

    Rows are drawn from per-row child streams keyed by the absolute first
    coordinate, so a window is bit-reproducible from (key, origin, extent).
    """
    na, nb = int(extent[0]), int(extent[1])
    if na <= 0 or nb <= 0:
        raise ParameterError(f"extent must be positive, got {extent}")
    if na * nb > MAX_DENSE_CELLS:
        raise CapacityError(f"{na}x{nb} window exceeds the dense-field budget of {MAX_DENSE_CELLS} cells")
    w = np.empty((na, nb), dtype=np.float64)
    for i in range(na):
        gen = generator(key.child(f"row{origin[0] + i}"))
        w[i, :] = -np.log1p(-gen.random(nb))
    return WeightWindow((int(origin[0]), int(origin[1])), w)


def rho_coords(a: int, b: int, rho: float) -> tuple[int, int]:
    """Direction-parametrised lattice coordinates.

    Maps (a, b) to ``(floor(2(1-rho)^2 a / D) + b, ceil(2 rho^2 a / D) - b)``
    with D = rho^2 + (1-rho)^2, evaluated in exact rational arithmetic on the
    binary value of ``rho`` so floor/ceil never suffer float rounding.  At
    rho = 1/2 this is (a+b, a-b).
    """
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0,1), got {rho}")
    r = Fraction(rho)
    d = r * r + (1 - r) * (1 - r)
    xa = 2 * (1 - r) * (1 - r) * a / d
    xb = 2 * r * r * a / d
    fl = xa.numerator // xa.denominator
    ce = -((-xb.numerator) // xb.denominator)
    return (int(fl) + b, int(ce) - b)


def direction_vertex(n: int, rho: float) -> tuple[int, int]:
    """Endpoint for an n-scale geodesic in direction rho: rho_coords(n, 0, rho)."""
    return rho_coords(n, 0, rho)


def _sub_rect(W: WeightWindow, u, v):
    iu, ju = W.index(u)
    iv, jv = W.index(v)
    if iu > iv or ju > jv:
        raise ParameterError(f"{tuple(u)} is not coordinate-wise <= {tuple(v)}")
    return iu, ju, iv, jv


def passage_time(W: WeightWindow, u, v) -> float:
    """Largest up-right path weight sum from u to v (endpoints included)."""
    iu, ju, iv, jv = _sub_rect(W, u, v)
    sub = W.weights[iu : iv + 1, ju : jv + 1]
    T = _kernels.lpp_passage_field(np.ascontiguousarray(sub))
    return float(T[-1, -1])


def passage_time_star(W: WeightWindow, u, v) -> float:
    """Passage time less the endpoint weight."""
    return passage_time(W, u, v) - W.weight(v)


def geodesic(W: WeightWindow, u, v, diagnostics: dict | None = None) -> LatticePath:
    """The up-right path attaining the passage time, by DP backtracking.

    With continuous weights the maximiser is a.s. unique; exact float ties
    are broken toward the (0,1) predecessor and counted in ``diagnostics``
    under ``"ties"`` when a dict is supplied.
    """
    iu, ju, iv, jv = _sub_rect(W, u, v)
    sub = W.weights[iu : iv + 1, ju : jv + 1]
    T = _kernels.lpp_passage_field(np.ascontiguousarray(sub))
    path_ij, ties = _kernels.lpp_backtrack(T)
    if diagnostics is not None:
        diagnostics["ties"] = diagnostics.get("ties", 0) + int(ties)
    verts = path_ij + np.array([W.origin[0] + iu, W.origin[1] + ju], dtype=np.int64)
    return LatticePath(verts)


def empirical_env(W: WeightWindow, path: LatticePath, s: int) -> EmpiricalEnvMeasure:
    """One environment sample per path vertex on the (2s+1)^2 window.

    Refuses (rather than zero-pads) when any sample window would leave the
    weight field; silent padding would bias the measure, so the caller must
    generate the field with an s-margin around the path.
    """
    if s < 0:
        raise ParameterError("window radius s must be >= 0")
    n = len(path)
    v = path.vertices
    lo_i = v[:, 0].min() - s - W.origin[0]
    lo_j = v[:, 1].min() - s - W.origin[1]
    hi_i = v[:, 0].max() + s - W.origin[0]
    hi_j = v[:, 1].max() + s - W.origin[1]
    na, nb = W.extent
    if lo_i < 0 or lo_j < 0 or hi_i >= na or hi_j >= nb:
        raise BoundsError(
            f"path plus margin s={s} leaves the window; enlarge the field "
            f"(need rows {lo_i}..{hi_i}, cols {lo_j}..{hi_j} within {na}x{nb})"
        )
    side = 2 * s + 1
    windows = np.empty((n, side, side), dtype=np.float64)
    masks = np.zeros((n, side, side), dtype=np.uint8)
    ii = v[:, 0] - W.origin[0]
    jj = v[:, 1] - W.origin[1]
    for k in range(n):
        windows[k] = W.weights[ii[k] - s : ii[k] + s + 1, jj[k] - s : jj[k] + s + 1]
        near = (np.abs(v[:, 0] - v[k, 0]) <= s) & (np.abs(v[:, 1] - v[k, 1]) <= s)
        rel = v[near] - v[k] + s
        masks[k, rel[:, 0], rel[:, 1]] = 1
    return EmpiricalEnvMeasure(s, v.copy(), windows, masks)


def corner_count(path: LatticePath) -> int:
    """Number of interior vertices where the path turns.

    A corner is a vertex v with {v-(1,0), v, v+(0,1)} or {v-(0,1), v, v+(1,0)}
    all on the path, i.e. the incoming and outgoing steps differ.
    """
    if len(path) < 3:
        return 0
    steps = np.diff(path.vertices, axis=0)
    return int(np.sum(steps[:-1, 0] != steps[1:, 0]))


def brute_force_passage(W: WeightWindow, u, v) -> tuple[float, LatticePath]:
    """Enumerate all up-right paths from u to v; the independent test oracle.

    Exponential in the rectangle size; intended for windows up to ~7x7.
    """
    iu, ju, iv, jv = _sub_rect(W, u, v)
    sub = W.weights[iu : iv + 1, ju : jv + 1]
    na, nb = sub.shape
    best = -np.inf
    best_path = None

    def walk(i, j, total, trail):
        nonlocal best, best_path
        total += sub[i, j]
        trail.append((i, j))
        if i == na - 1 and j == nb - 1:
            if total > best:
                best = total
                best_path = list(trail)
        else:
            if i < na - 1:
                walk(i + 1, j, total, trail)
            if j < nb - 1:
                walk(i, j + 1, total, trail)
        trail.pop()

    walk(0, 0, 0.0, [])
    verts = np.array(best_path, dtype=np.int64) + np.array([W.origin[0] + iu, W.origin[1] + ju])
    return float(best), LatticePath(verts)
