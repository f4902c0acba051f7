"""Event-driven exclusion dynamics with labelled holes and particles.

Particles jump one site to the right into holes at rate 1.  The simulator
keeps a label for every hole (ascending left to right, the hole at site 0 is
label 0) and every particle (ascending right to left, the particle at site 1
is label 0), records the swap time of every (hole, particle) pair, and tracks
the distinguished hole-particle pair that starts at sites 0/1: the pair moves
right when its particle swaps with the hole beyond it and left when its hole
swaps with the particle behind it, so its label pair (a_t, b_t) counts right
and left moves and the pair hole sits at site a_t - b_t.

Scheduling is exact: each admissible bond (particle immediately left of a
hole) gets a fresh Exp(1) firing time when it becomes admissible, and a swap
can only create new admissible bonds next to it, never disturb a pending one,
so a single priority queue with no cancellation realises the continuous-time
law.  Occupancies outside the window are frozen (no flux); the distance of
the nearest event to the window edge is tracked so the caller can judge the
margin.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, TruncationError
from .stats import report_fragment
from .streams import StreamKey, generator, sample_bernoulli


@dataclass
class SwapLog:
    """Swap times L(a, b) by (hole label, particle label), plus the waits.

    ``waits[(a, b)]`` is the Exp(1) clock drawn when the pair became
    adjacent, so L(a,b) = max(L(a-1,b), L(a,b-1), 0) + waits[(a,b)] holds
    exactly (the coupling identity the checker verifies).
    """

    times: dict = field(default_factory=dict)
    waits: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def record(self, a, b, t, w):
        self.times[(a, b)] = t
        self.waits[(a, b)] = w


class TasepState:
    """Occupancy window with labels, the tracked pair, and pending clocks."""

    def __init__(self, occupancy: np.ndarray, site_lo: int, key: StreamKey):
        occ = np.asarray(occupancy, dtype=np.int8)
        if occ.ndim != 1 or occ.size < 4:
            raise ParameterError("occupancy must be a 1-D array of at least 4 sites")
        i_zero = -site_lo
        if not (0 <= i_zero and i_zero + 1 < occ.size):
            raise ParameterError("window must contain sites 0 and 1")
        if occ[i_zero] != 0 or occ[i_zero + 1] != 1:
            raise ParameterError("sites 0/1 must hold the hole-particle pair")
        self.occ = occ.copy()
        self.site_lo = int(site_lo)
        self.clock = 0.0
        self.rng = generator(key.child("clocks"))
        n = occ.size
        self.hole_label = np.zeros(n, dtype=np.int64)
        self.part_label = np.zeros(n, dtype=np.int64)
        holes = np.flatnonzero(self.occ == 0)
        parts = np.flatnonzero(self.occ == 1)
        self.hole_label[holes] = np.arange(len(holes)) - int(np.searchsorted(holes, i_zero))
        self.part_label[parts] = int(np.searchsorted(parts, i_zero + 1)) - np.arange(len(parts))
        # initial positions by label, frozen for the time-zero interchange set
        self._init_hole_sites = holes + site_lo
        self._init_hole_base = int(np.searchsorted(holes, i_zero))
        self._init_part_sites = parts + site_lo
        self._init_part_base = int(np.searchsorted(parts, i_zero + 1))
        self.pair_site = 0
        self.pair_a = 0
        self.pair_b = 0
        self.right_moves = 0
        self.left_moves = 0
        self.pair_history: list[tuple[float, int, int]] = []
        self.min_edge_gap = occ.size
        self.log = SwapLog()
        self._heap: list[tuple[float, int, float]] = []
        for x in range(n - 1):
            if self.occ[x] == 1 and self.occ[x + 1] == 0:
                w = float(-np.log1p(-self.rng.random()))
                heapq.heappush(self._heap, (w, x, 0.0))

    # -- label geometry ----------------------------------------------------

    def hole_site0(self, a: int) -> int:
        """Initial site of hole label a."""
        idx = self._init_hole_base + a
        if not 0 <= idx < self._init_hole_sites.size:
            raise ParameterError(f"hole label {a} not in window")
        return int(self._init_hole_sites[idx])

    def part_site0(self, b: int) -> int:
        """Initial site of particle label b."""
        idx = self._init_part_base - b
        if not 0 <= idx < self._init_part_sites.size:
            raise ParameterError(f"particle label {b} not in window")
        return int(self._init_part_sites[idx])

    def initially_interchanged(self, a: int, b: int) -> bool:
        """True when particle b started to the right of hole a (L(a,b) = 0)."""
        return self.part_site0(b) > self.hole_site0(a)

    def site_index(self, site: int) -> int:
        i = site - self.site_lo
        if not 0 <= i < self.occ.size:
            raise TruncationError(f"site {site} outside window")
        return i

    def occupancy(self, site: int) -> int:
        return int(self.occ[self.site_index(site)])


def init_bernoulli_pair(rho: float, wd: int, key: StreamKey) -> TasepState:
    """Pair at sites 0/1, i.i.d. Bernoulli(rho) elsewhere on [-wd, wd]."""
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0,1), got {rho}")
    if wd < 2:
        raise ParameterError("window half-width must be >= 2")
    gen = generator(key.child("init"))
    occ = sample_bernoulli(gen, rho, 2 * wd + 1)
    occ[wd] = 0
    occ[wd + 1] = 1
    return TasepState(occ, -wd, key)


def init_from_occupancy(occ, site_lo: int, key: StreamKey) -> TasepState:
    """Wrap an explicit occupancy snapshot (pair must sit at sites 0/1)."""
    return TasepState(occ, site_lo, key)


def evolve(state: TasepState, t_max: float, stop=None, track_pair_history: bool = False):
    """Run the event queue up to t_max (or until ``stop`` returns True).

    Every swap is recorded in the state's SwapLog with its label pair and the
    waiting time that produced it.  ``stop(state, a, b, t)`` is consulted
    after each swap.  Returns (state, log); the state is evolved in place and
    can be evolved further (pending clocks are kept).
    """
    if t_max < state.clock:
        raise ParameterError("t_max is before the current clock")
    occ = state.occ
    n = occ.size
    heap = state._heap
    rng = state.rng
    while heap and heap[0][0] <= t_max:
        t, x, _act = heapq.heappop(heap)
        # admissible bonds can never be disturbed before firing
        b = int(state.part_label[x])
        a = int(state.hole_label[x + 1])
        state.log.record(a, b, t, t - _act)
        occ[x] = 0
        occ[x + 1] = 1
        state.hole_label[x] = a
        state.part_label[x + 1] = b
        gap = min(x, n - 2 - x)
        if gap < state.min_edge_gap:
            state.min_edge_gap = gap
        site_x = state.site_lo + x
        if site_x == state.pair_site + 1:
            # the pair's particle moved right; adopt the hole it displaced
            state.pair_site += 1
            state.pair_a = a
            state.right_moves += 1
            if track_pair_history:
                state.pair_history.append((t, state.pair_a, state.pair_b))
        elif site_x + 1 == state.pair_site:
            # the pair's hole moved left; adopt the particle that displaced it
            state.pair_site -= 1
            state.pair_b = b
            state.left_moves += 1
            if track_pair_history:
                state.pair_history.append((t, state.pair_a, state.pair_b))
        if x - 1 >= 0 and occ[x - 1] == 1:
            w = float(-np.log1p(-rng.random()))
            heapq.heappush(heap, (t + w, x - 1, t))
        if x + 2 < n and occ[x + 2] == 0:
            w = float(-np.log1p(-rng.random()))
            heapq.heappush(heap, (t + w, x + 1, t))
        if stop is not None and stop(state, a, b, t):
            state.clock = t
            return state, state.log
    state.clock = t_max
    return state, state.log


def seen_from_pair(state: TasepState, lo: int, hi: int) -> np.ndarray:
    """Occupancy on sites [lo, hi] relative to the pair hole.

    Positions 0 and 1 of the pair frame always read hole, particle.
    """
    i0 = state.pair_site - state.site_lo
    if i0 + lo < 0 or i0 + hi >= state.occ.size:
        raise TruncationError("pair window leaves the simulation window; enlarge it")
    return state.occ[i0 + lo : i0 + hi + 1].copy()


# ---------------------------------------------------------------------------
# Coupling check: the event-driven dynamics against the growth recursion
# ---------------------------------------------------------------------------


@dataclass
class CouplingReport:
    """Outcome of rebuilding the swap log through the growth recursion."""

    ok: bool
    swaps: int
    mismatches: int
    max_deviation: float
    pair_moves: int
    pair_trajectory_ok: bool
    pair_site_identity_ok: bool

    def fragments(self):
        return [
            report_fragment("swap_log_recursion_max_dev", self.max_deviation, 0.0, self.mismatches == 0),
            report_fragment("pair_trajectory_matches", float(self.pair_trajectory_ok), 1.0, self.pair_trajectory_ok),
            report_fragment("pair_site_identity", float(self.pair_site_identity_ok), 1.0, self.pair_site_identity_ok),
        ]


def lpp_clock_coupling_check(rho: float, wd: int, t_max: float, key: StreamKey) -> CouplingReport:
    """Build the growth picture two ways from the same waiting variables.

    (i) the event-driven swap log L(a,b);
    (ii) the corner-growth recursion L(a,b) = max(L(a-1,b), L(a,b-1)) + w(a,b)
    seeded with 0 on the initially-interchanged set, using the waits
    harvested from the simulator's own clocks.

    Checks bit-exact equality of the two logs, that the tracked pair's
    trajectory equals the clock process along the argmin ray of L, and that
    the pair hole sits at site a_t - b_t throughout.
    """
    state = init_bernoulli_pair(rho, wd, key)
    evolve(state, t_max, track_pair_history=True)
    log = state.log

    mismatches = 0
    max_dev = 0.0
    for (a, b), t in log.times.items():
        prev = 0.0
        for pa, pb in ((a - 1, b), (a, b - 1)):
            if (pa, pb) in log.times:
                prev = max(prev, log.times[(pa, pb)])
            elif not state.initially_interchanged(pa, pb):
                mismatches += 1  # prerequisite missing from the log
                continue
        rebuilt = prev + log.waits[(a, b)]
        dev = abs(rebuilt - t)
        if dev > max_dev:
            max_dev = dev
        if rebuilt != t:
            mismatches += 1

    # pair trajectory = clock process along the argmin ray of L
    traj_ok = True
    a = b = 0
    for t, ra, rb in state.pair_history:
        tr = log.times.get((a + 1, b))
        tu = log.times.get((a, b + 1))
        if tr is None or tu is None:
            traj_ok = False
            break
        if tr < tu:
            a, move_t = a + 1, tr
        else:
            b, move_t = b + 1, tu
        if (ra, rb) != (a, b) or move_t != t:
            traj_ok = False
            break
    site_ok = state.pair_site == state.pair_a - state.pair_b

    return CouplingReport(
        ok=(mismatches == 0 and traj_ok and site_ok),
        swaps=len(log),
        mismatches=mismatches,
        max_deviation=max_dev,
        pair_moves=len(state.pair_history),
        pair_trajectory_ok=traj_ok,
        pair_site_identity_ok=site_ok,
    )
