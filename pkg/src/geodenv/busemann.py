"""Exact-in-law sampling of the direction-rho passage-time asymptotics field.

The field G on a box is generated from its known boundary law: increments
along any down-right path are independent exponentials (Exp(rho) vertical,
Exp(1-rho) horizontal), and the interior satisfies the min-recursion
``G(a,b) = min(G(a+1,b), G(a,b+1)) - xi(a,b)`` with fresh i.i.d. Exp(1)
interior weights.  Laying the increments on the north-east edges and running
the recursion south-west yields the restriction of the field to the box,
exactly in law; the interior weights are taken independent of the boundary
increments, the standard stationary coupling.

Two consumers with different scales:

* :func:`sample_busemann_box` materialises G densely; right for boxes up to
  a few thousand vertices on a side (property checks, clock-process runs).
* :func:`ray_environment` follows the semi-infinite argmin ray for tens of
  thousands of steps without storing the field: the box is swept once in the
  reversed orientation (where the same recursion reads as a max-recursion
  with stationary boundary weights on the axes), keeping one rolling row
  plus a packed predecessor bitmap, and the weights along the ray are
  re-materialised afterwards by counter addressing into the same streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BoundsError, CapacityError, ParameterError, TruncationError
from .lattice import MAX_DENSE_CELLS, LatticePath, WeightWindow
from .streams import StreamKey, exponential_slice, generator

_BITMAP_BUDGET_CELLS = 4_000_000_000  # 1 bit per cell => 500 MB hard cap


def _check_rho(rho):
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0,1), got {rho}")


@dataclass(frozen=True)
class BusemannField:
    """Field values G on a box, normalised so G(box origin) = 0.

    ``G[i, j]`` is the value at vertex ``origin + (i, j)``; increments
    G(a+1,b) - G(a,b) are Exp(1-rho) and G(a,b+1) - G(a,b) are Exp(rho).
    """

    origin: tuple[int, int]
    G: np.ndarray
    rho: float

    @property
    def extent(self):
        return self.G.shape

    def index(self, v):
        i, j = v[0] - self.origin[0], v[1] - self.origin[1]
        na, nb = self.G.shape
        if not (0 <= i < na and 0 <= j < nb):
            raise BoundsError(f"vertex {tuple(v)} outside field box")
        return i, j

    def value(self, v) -> float:
        i, j = self.index(v)
        return float(self.G[i, j])

    def b_between(self, u, v) -> float:
        """Increment G(v) - G(u); additive by construction."""
        return self.value(v) - self.value(u)


def sample_busemann_box(extent, rho: float, key: StreamKey, origin=(0, 0)) -> BusemannField:
    """Dense field on ``origin + [0,na) x [0,nb)``.

    Boundary increments go on the top edge (leftward, Exp(1-rho)) and right
    edge (downward, Exp(rho)); the interior is filled by the min-recursion
    with fresh Exp(1) weights.
    """
    _check_rho(rho)
    na, nb = int(extent[0]), int(extent[1])
    if na < 2 or nb < 2:
        raise ParameterError("box must be at least 2x2")
    if na * nb > MAX_DENSE_CELLS:
        raise CapacityError(f"dense field {na}x{nb} exceeds budget")
    G = np.empty((na, nb), dtype=np.float64)
    gb = generator(key.child("boundary"))
    # top edge leftward from the NE corner: horizontal increments Exp(1-rho)
    hinc = -np.log1p(-gb.random(na - 1)) / (1.0 - rho)
    # right edge downward: vertical increments Exp(rho)
    vinc = -np.log1p(-gb.random(nb - 1)) / rho
    G[na - 1, nb - 1] = 0.0
    G[: na - 1, nb - 1] = -np.cumsum(hinc[::-1])[::-1]
    G[na - 1, : nb - 1] = -np.cumsum(vinc[::-1])[::-1]
    xi = np.empty((na - 1, nb - 1), dtype=np.float64)
    for i in range(na - 1):
        g = generator(key.child(f"xi{origin[0] + i}"))
        xi[i, :] = -np.log1p(-g.random(nb - 1))
    _kernels.busemann_fill(G, xi)
    G = G - G[0, 0]
    return BusemannField((int(origin[0]), int(origin[1])), G, float(rho))


def recover_xi_forward(F: BusemannField) -> WeightWindow:
    """Weights xi(a,b) = min(G(a+1,b), G(a,b+1)) - G(a,b).

    These are the i.i.d. Exp(1) weights whose geodesics the field describes;
    re-running the min-recursion with them reproduces G exactly.
    """
    G = F.G
    xi = np.minimum(G[1:, :-1], G[:-1, 1:]) - G[:-1, :-1]
    return WeightWindow(F.origin, xi)


def recovered_weights_down(F: BusemannField) -> np.ndarray:
    """Down-left reconstruction xi_down(a,b) = G(a,b) - max(G(a-1,b), G(a,b-1)).

    Entries are i.i.d. Exp(1); returned for vertices with both predecessors
    in the box, i.e. shape (na-1, nb-1) anchored at origin + (1,1).
    """
    G = F.G
    return G[1:, 1:] - np.maximum(G[:-1, 1:], G[1:, :-1])


def semi_infinite_geodesic(F: BusemannField, start, max_steps: int) -> LatticePath:
    """Argmin walk: step to whichever forward neighbour has the smaller G.

    This is the restriction of the direction-rho semi-infinite geodesic,
    which points along (1, rho^2/(1-rho)^2).  Raises TruncationError when
    the walk would need a neighbour outside the box.
    """
    i, j = F.index(start)
    na, nb = F.extent
    verts = np.empty((max_steps + 1, 2), dtype=np.int64)
    verts[0] = (start[0], start[1])
    G = F.G
    for k in range(max_steps):
        if i + 1 >= na or j + 1 >= nb:
            raise TruncationError(
                f"ray hit the box edge after {k} of {max_steps} steps; enlarge the box",
                needed=max_steps,
                available=k,
            )
        if G[i + 1, j] <= G[i, j + 1]:
            i += 1
        else:
            j += 1
        verts[k + 1] = (F.origin[0] + i, F.origin[1] + j)
    return LatticePath(verts)


def p_process(F: BusemannField, path: LatticePath, t: float):
    """Last path vertex whose field value is <= t.

    For t below the value at the path start, returns the start (the clock
    starts with the origin already occupied).  Requires the value at the
    path end to exceed t so the answer is not truncated.
    """
    vals = np.array([F.G[F.index(v)] for v in path.vertices])
    if vals[-1] <= t:
        raise TruncationError("path ends before the clock reaches t; extend the ray")
    if t < vals[0]:
        return tuple(path.vertices[0])
    k = int(np.searchsorted(vals, t, side="right") - 1)
    return tuple(path.vertices[k])


# ---------------------------------------------------------------------------
# Streaming ray engine
# ---------------------------------------------------------------------------


def ray_box_extent(steps: int, rho: float, margin_factor: float = 6.0, pad: int = 64):
    """Box extent for a direction-rho ray of the given step count.

    Directional extent follows the ray direction; the transverse margin
    scales like steps^(2/3) (the wandering scale), with the factor exposed
    because the margin is verified at runtime, not assumed.
    """
    _check_rho(rho)
    s = rho * rho + (1 - rho) * (1 - rho)
    wa = (1 - rho) * (1 - rho) / s
    wb = rho * rho / s
    marg = int(np.ceil(margin_factor * steps ** (2.0 / 3.0))) + pad
    return int(np.ceil(steps * wa)) + marg, int(np.ceil(steps * wb)) + marg


@dataclass
class RayEnvironment:
    """Environment along a semi-infinite ray from the origin.

    vertices:       (n, 2) ray vertices from (0, 0).
    center_weights: weight at each ray vertex.
    clock:          field value G at each ray vertex (0 at the origin).
    windows:        optional (n, 2s+1, 2s+1) local weight windows.
    pathmasks:      optional matching path-shape masks.
    ties:           exact float ties met during the sweep (diagnostics).
    """

    vertices: np.ndarray
    center_weights: np.ndarray
    clock: np.ndarray
    s: int
    windows: np.ndarray | None
    pathmasks: np.ndarray | None
    ties: int


def ray_environment(
    rho: float,
    steps: int,
    key: StreamKey,
    s: int = 0,
    margin_factor: float = 6.0,
) -> RayEnvironment:
    """Ray of ``steps`` steps plus its local environment, in O(width) memory.

    The box covers lattice [-s-1, A] x [-s-1, B] so windows around the ray
    origin stay interior.  One sweep in the reversed orientation fills a
    rolling row and a predecessor bitmap; backtracking from the cell of the
    lattice origin yields the argmin ray in forward order, and the weights
    along it are re-read from the same keyed streams by counter offset.
    """
    _check_rho(rho)
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if s < 0:
        raise ParameterError("window radius s must be >= 0")
    m = s + 1  # SW extension and interior keep-out
    walk_steps = steps + 2 * s  # extra vertices so end-of-range masks are honest
    A, B = ray_box_extent(walk_steps, rho, margin_factor)
    nI = A + m + 1  # H rows 0..A+m
    nJ = B + m + 1
    if nI * nJ > _BITMAP_BUDGET_CELLS:
        raise CapacityError(f"ray box {nI}x{nJ} exceeds the bitmap budget")

    bits = np.zeros((nI, (nJ + 7) // 8), dtype=np.uint8)
    row = np.empty(nJ, dtype=np.float64)
    gb = generator(key.child("boundary"))
    row[0] = 0.0
    row[1:] = np.cumsum(-np.log1p(-gb.random(nJ - 1)) / rho)
    hstep = -np.log1p(-gb.random(nI - 1)) / (1.0 - rho)
    ties = 0
    for i in range(1, nI):
        g = generator(key.child(f"w{i}"))
        w = -np.log1p(-g.random(nJ))
        row[0] += hstep[i - 1]
        ties += int(_kernels.h_row_update(row, w, bits[i]))

    # Lattice (a, b) lives at H-cell (A - a, B - b); the origin is (A, B).
    path_ij, done = _kernels.h_backtrack(bits, A, B, walk_steps, m)
    if done < walk_steps:
        raise TruncationError(
            f"ray used {done} of {walk_steps} steps before nearing the box edge; "
            f"enlarge margin_factor (= {margin_factor})",
            needed=walk_steps,
            available=done,
        )
    path_ij = path_ij[: walk_steps + 1]
    all_verts = np.empty((walk_steps + 1, 2), dtype=np.int64)
    all_verts[:, 0] = A - path_ij[:, 0]
    all_verts[:, 1] = B - path_ij[:, 1]

    n = steps + 1
    verts = all_verts[:n]

    # second pass: per-row column spans we need, then slice from the streams
    spans: dict[int, tuple[int, int]] = {}
    for k in range(n):
        i0, j0 = int(path_ij[k, 0]), int(path_ij[k, 1])
        for i in range(i0 - s, i0 + s + 1):
            lo, hi = spans.get(i, (j0 - s, j0 + s))
            spans[i] = (min(lo, j0 - s), max(hi, j0 + s))
    cache: dict[int, tuple[int, np.ndarray]] = {}
    for i, (jlo, jhi) in spans.items():
        if not (1 <= i < nI) or jlo < 1 or jhi >= nJ:
            raise TruncationError("environment window leaves the interior; enlarge the margin")
        cache[i] = (jlo, exponential_slice(key.child(f"w{i}"), 1.0, jlo, jhi - jlo + 1))

    def wH(i, j):
        jlo, vals = cache[i]
        return vals[j - jlo]

    center_w = np.empty(n, dtype=np.float64)
    side = 2 * s + 1
    windows = np.empty((n, side, side), dtype=np.float64) if s > 0 else None
    masks = np.zeros((n, side, side), dtype=np.uint8) if s > 0 else None
    for k in range(n):
        i0, j0 = int(path_ij[k, 0]), int(path_ij[k, 1])
        center_w[k] = wH(i0, j0)
        if s > 0:
            for da in range(-s, s + 1):
                jlo, vals = cache[i0 - da]
                seg = vals[j0 - s - jlo : j0 + s + 1 - jlo]
                windows[k, da + s, :] = seg[::-1]
    if s > 0:
        for k in range(n):
            lo = max(0, k - 2 * s)
            hi = min(walk_steps + 1, k + 2 * s + 1)
            for mm in range(lo, hi):
                da = all_verts[mm, 0] - verts[k, 0]
                db = all_verts[mm, 1] - verts[k, 1]
                if abs(da) <= s and abs(db) <= s:
                    masks[k, da + s, db + s] = 1

    # stepping off a vertex consumes its weight: G(v_k) = sum_{m<k} xi(v_m)
    clock = np.concatenate([[0.0], np.cumsum(center_w[:-1])])

    return RayEnvironment(
        vertices=verts,
        center_weights=center_w,
        clock=clock,
        s=s,
        windows=windows,
        pathmasks=masks,
        ties=ties,
    )
