"""The orbit x_n = rho_n u(t_n) and its running means.

Orbit points are never materialized as Hilbert-space vectors: with
rho_n = exp(-(d_1^2 + ... + d_{n-1}^2)) every inner product is available in
closed form,

    <x_m, x_n> = rho_m rho_n exp(-(t_m - t_n)^2),

evaluated with a single exponential on log-domain radii.  The index
``math.inf`` denotes the weak limit point 0, so <x_m, x_inf> = 0.

Cesaro means y_n = (x_1 + ... + x_n)/n are traced by a streaming Gram
recurrence ||s_n||^2 = ||s_{n-1}||^2 + 2 sum_{k<n} <x_k, x_n> + rho_n^2
with compensated accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mesh import (BlockMeta, Mesh, PAIR_BUDGET_DEFAULT, ensure_valid,
                   mesh_level)
from .util import Kahan, chunk_ranges, map_ordered

INF = math.inf
STREAM_CAP_DEFAULT = 100_000


@dataclass(frozen=True)
class Orbit:
    """Orbit data over a mesh; log_rho[i] = ln rho_{i+1}, rho strictly decreasing."""

    mesh: Mesh
    meta: BlockMeta | None
    log_rho: np.ndarray
    rho: np.ndarray
    rho_inf_lo: float
    rho_inf_hi: float

    def __post_init__(self) -> None:
        for name in ("log_rho", "rho"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    def __len__(self) -> int:
        return int(self.rho.size)

    @property
    def rho_inf_bracket(self) -> tuple[float, float]:
        """Enclosure of the limiting radius rho_inf = exp(-sum d_k^2) > 0."""
        return self.rho_inf_lo, self.rho_inf_hi


@dataclass(frozen=True)
class CesaroTrace:
    """Streaming mean norms plus independently recomputed probe values."""

    y_norm: np.ndarray              # y_norm[i] = ||y_{i+1}||
    probes: dict[int, float]        # direct O(n^2) recomputation per probe index
    z_norm: dict[int, float] = field(default_factory=dict)   # block mean norms

    def __post_init__(self) -> None:
        self.y_norm.setflags(write=False)

    @property
    def upto(self) -> int:
        return int(self.y_norm.size)

    @property
    def probe_indices(self) -> list[int]:
        return sorted(self.probes)


def _tail_sq_bound(mesh: Mesh, meta: BlockMeta | None) -> float:
    """Upper bound on sum_{k>=N} d_k^2 for the hypothetical mesh continuation."""
    n = len(mesh)
    if mesh.kind == "harmonic":
        delta = mesh.param
        if n == 1:
            return delta * delta * (math.pi ** 2 / 6.0)
        return delta * delta / (n - 1)
    if mesh.kind == "block":
        if meta is None:
            raise ValueError("a block mesh needs its BlockMeta for the tail bound")
        k = meta.num_blocks
        future = (1.0 / 3.0) * 4.0 ** (-(k + 1)) + 2.0 ** (-(k + 1))
        return float(mesh.d[-1]) ** 2 + future
    raise ValueError(f"no tail bound available for mesh kind {mesh.kind!r}")


def build_orbit(mesh: Mesh, meta: BlockMeta | None = None, *,
                validate: bool = True, pair_budget: int = PAIR_BUDGET_DEFAULT,
                seed: int = 0) -> Orbit:
    """Radii, knots, and a rho_inf enclosure for a validated mesh."""
    if validate:
        ensure_valid(mesh, pair_budget=pair_budget, seed=seed)
    sq = mesh.d * mesh.d
    acc = Kahan()
    log_rho = np.empty(len(mesh))
    log_rho[0] = 0.0
    for i in range(1, len(mesh)):
        acc.add(float(sq[i - 1]))
        log_rho[i] = -acc.value
    rho = np.exp(log_rho)
    tail = _tail_sq_bound(mesh, meta)
    lo = float(rho[-1]) * math.exp(-tail)
    return Orbit(mesh=mesh, meta=meta, log_rho=log_rho, rho=rho,
                 rho_inf_lo=lo, rho_inf_hi=float(rho[-1]))


def _index(orbit: Orbit, n) -> int:
    """1-based index to 0-based array position; rejects anything else."""
    if isinstance(n, float) and not n.is_integer():
        raise IndexError(f"orbit index must be an integer or inf, got {n}")
    i = int(n)
    if not 1 <= i <= len(orbit):
        raise IndexError(f"orbit index {i} outside 1..{len(orbit)}")
    return i - 1


def orbit_point(orbit: Orbit, n) -> tuple[float, float]:
    """(rho_n, t_n); the limit index inf maps to (0, inf)."""
    if n == INF:
        return 0.0, INF
    i = _index(orbit, n)
    return float(orbit.rho[i]), float(orbit.mesh.t[i])


def pair_inner(orbit: Orbit, m, n) -> float:
    """<x_m, x_n> = rho_m rho_n exp(-(t_m - t_n)^2); zero if either index is inf."""
    if m == INF or n == INF:
        if m != INF:
            _index(orbit, m)
        if n != INF:
            _index(orbit, n)
        return 0.0
    i, j = _index(orbit, m), _index(orbit, n)
    gap = orbit.mesh.t[j] - orbit.mesh.t[i]
    return math.exp(orbit.log_rho[i] + orbit.log_rho[j] - gap * gap)


def orbit_identities(orbit: Orbit, n: int) -> dict[str, float]:
    """Closed-form consistency checks around index n.

    consecutive_inner      <x_{n+1}, x_n> - rho_{n+1}^2        (= 0 exactly)
    increment_orthogonal   <x_{n+1} - x_n, x_{n+1}>            (= 0 exactly)
    gram_min               smallest sampled <x_i, x_j>         (> 0 always)
    """
    i = _index(orbit, n)
    if i + 1 >= len(orbit):
        raise IndexError(f"need index n+1 <= {len(orbit)}, got n = {n}")
    fwd = pair_inner(orbit, n, n + 1)
    nrm = pair_inner(orbit, n + 1, n + 1)
    big = len(orbit)
    sample = {(1, n), (n, n + 1), (1, big), (n, big), (n + 1, big)}
    gram_min = min(pair_inner(orbit, a, b) for a, b in sample)
    return {
        "consecutive_inner": fwd - nrm,
        "increment_orthogonal": nrm - fwd,
        "gram_min": gram_min,
    }


def firm_residual(orbit: Orbit, m, n) -> float:
    """Firm-nonexpansiveness inner product at indices m < n (n may be inf).

    Returns <x_{m+1} - x_{n+1}, (x_m - x_{m+1}) - (x_n - x_{n+1})>, which is
    nonnegative for every admissible mesh; for n = inf both limit terms
    vanish and the expression collapses to <x_{m+1}, x_m - x_{m+1}> = 0.
    """
    i = _index(orbit, m)
    if i + 1 >= len(orbit):
        raise IndexError(f"need m+1 <= {len(orbit)}, got m = {m}")
    if n == INF:
        return pair_inner(orbit, m, m + 1) - pair_inner(orbit, m + 1, m + 1)
    j = _index(orbit, n)
    if j <= i:
        raise ValueError(f"need m < n, got m = {m}, n = {n}")
    if j + 1 >= len(orbit):
        raise IndexError(f"need n+1 <= {len(orbit)}, got n = {n}")
    g = lambda a, b: pair_inner(orbit, a, b)
    return (g(m + 1, m) - g(m + 1, m + 1) - g(m + 1, n) + g(m + 1, n + 1)
            - g(n + 1, m) + g(n + 1, m + 1) + g(n + 1, n) - g(n + 1, n + 1))


def _consecutive_gram(orbit: Orbit) -> tuple[np.ndarray, np.ndarray]:
    """Arrays H[i] = <x_{i+1}, x_{i+2}> (length N-1) and P[i] = ||x_{i+1}||^2."""
    lr, t = orbit.log_rho, orbit.mesh.t
    gap = t[1:] - t[:-1]
    fwd = np.exp(lr[:-1] + lr[1:] - gap * gap)
    sq = np.exp(2.0 * lr)
    return fwd, sq


def firm_residual_pairs(orbit: Orbit, ms: np.ndarray, ns: np.ndarray) -> np.ndarray:
    """Vectorized firm_residual over 1-based index pair arrays with m < n."""
    lr, t = orbit.log_rho, orbit.mesh.t
    if ms.size == 0:
        return np.zeros(0)
    if np.any(ms < 1) or np.any(ns <= ms) or np.any(ns + 1 > len(orbit)):
        raise ValueError("pair arrays must satisfy 1 <= m < n <= N-1")
    fwd, sq = _consecutive_gram(orbit)
    m0, n0 = ms - 1, ns - 1
    gap_c = t[n0] - t[m0 + 1]
    gap_d = t[n0 + 1] - t[m0 + 1]
    gap_e = t[n0 + 1] - t[m0]
    c = np.exp(lr[m0 + 1] + lr[n0] - gap_c * gap_c)
    d = np.exp(lr[m0 + 1] + lr[n0 + 1] - gap_d * gap_d)
    e = np.exp(lr[n0 + 1] + lr[m0] - gap_e * gap_e)
    return fwd[m0] - sq[m0 + 1] - c + 2.0 * d - e + fwd[n0] - sq[n0 + 1]


def firm_residual_sweep(orbit: Orbit, n_max: int, *,
                        threads: int = 1) -> tuple[float, tuple[int, int]]:
    """Minimum firm residual over all pairs 1 <= m < n <= n_max."""
    n_max = int(n_max)
    if not 2 <= n_max <= len(orbit) - 1:
        raise ValueError(f"n_max must lie in [2, {len(orbit) - 1}], got {n_max}")
    lr, t = orbit.log_rho, orbit.mesh.t
    fwd, sq = _consecutive_gram(orbit)

    def scan(lo: int, hi: int) -> tuple[float, tuple[int, int]]:
        best = math.inf
        best_pair = (lo + 1, lo + 2)
        for m0 in range(lo, hi):
            n0 = np.arange(m0 + 1, n_max)
            gap_c = t[n0] - t[m0 + 1]
            gap_d = t[n0 + 1] - t[m0 + 1]
            gap_e = t[n0 + 1] - t[m0]
            c = np.exp(lr[m0 + 1] + lr[n0] - gap_c * gap_c)
            d = np.exp(lr[m0 + 1] + lr[n0 + 1] - gap_d * gap_d)
            e = np.exp(lr[n0 + 1] + lr[m0] - gap_e * gap_e)
            vals = fwd[m0] - sq[m0 + 1] - c + 2.0 * d - e + fwd[n0] - sq[n0 + 1]
            j = int(np.argmin(vals))
            if vals[j] < best:
                best = float(vals[j])
                best_pair = (m0 + 1, m0 + 2 + j)
        return best, best_pair

    results = map_ordered(scan, chunk_ranges(n_max - 1, 256), threads)
    return min(results, key=lambda r: r[0])


def firm_limit_residuals(orbit: Orbit, m_max: int) -> np.ndarray:
    """firm_residual(orbit, m, inf) for m = 1..m_max; identically zero in exact
    arithmetic, so only rounding noise is returned."""
    m_max = int(m_max)
    if not 1 <= m_max <= len(orbit) - 1:
        raise ValueError(f"m_max must lie in [1, {len(orbit) - 1}], got {m_max}")
    fwd, sq = _consecutive_gram(orbit)
    return fwd[:m_max] - sq[1:m_max + 1]


def cone_alignment_identity(orbit: Orbit, coeffs: Mapping[int, float],
                            n: int) -> tuple[float, float]:
    """Both sides of the cone-witness equivalence at index n.

    For y = sum_p c_p x_p with c_p >= 0, returns
    lhs = <x_{n+1} - y, x_n - x_{n+1}> and rhs = <x_{n+1}, y> - <x_n, y>;
    the two agree because the increment is orthogonal to x_{n+1}.
    """
    i = _index(orbit, n)
    if i + 1 >= len(orbit):
        raise IndexError(f"need index n+1 <= {len(orbit)}, got n = {n}")
    terms_n, terms_n1 = [], []
    for p, w in coeffs.items():
        w = float(w)
        if w < 0.0:
            raise ValueError(f"cone coefficients must be >= 0, got {w} at {p}")
        _index(orbit, p)
        terms_n.append(w * pair_inner(orbit, p, n))
        terms_n1.append(w * pair_inner(orbit, p, n + 1))
    sum_n = math.fsum(terms_n)
    sum_n1 = math.fsum(terms_n1)
    base = pair_inner(orbit, n, n + 1) - pair_inner(orbit, n + 1, n + 1)
    return base - sum_n + sum_n1, sum_n1 - sum_n


def _row_sum(orbit: Orbit, first0: int, n0: int, buf: np.ndarray) -> float:
    """sum_{k0 in [first0, n0)} <x_{k0+1}, x_{n0+1}> via one vector pass."""
    lr, t = orbit.log_rho, orbit.mesh.t
    m = n0 - first0
    view = buf[:m]
    np.subtract(t[n0], t[first0:n0], out=view)
    np.multiply(view, view, out=view)
    np.subtract(lr[first0:n0], view, out=view)
    np.add(view, lr[n0], out=view)
    np.exp(view, out=view)
    return float(np.sum(view))


def _mean_norm_direct(orbit: Orbit, first: int, last: int) -> float:
    """|| (x_first + ... + x_last) / M || by direct Gram accumulation."""
    f0, l0 = first - 1, last - 1
    m = last - first + 1
    acc = Kahan()
    acc.add(float(np.sum(np.exp(2.0 * orbit.log_rho[f0:l0 + 1]))))
    buf = np.empty(m)
    for n0 in range(f0 + 1, l0 + 1):
        acc.add(2.0 * _row_sum(orbit, f0, n0, buf))
    return math.sqrt(acc.value) / m


def cesaro_norms(orbit: Orbit, upto: int, probe: Iterable[int] = (), *,
                 max_stream: int = STREAM_CAP_DEFAULT) -> CesaroTrace:
    """Streaming ||y_n|| for n = 1..upto plus direct recomputation at probes.

    The stream is O(upto^2); indices beyond `max_stream` must be requested
    as probes, each costing an O(n^2) double sum of its own.
    """
    upto = int(upto)
    if not 1 <= upto <= len(orbit):
        raise ValueError(f"upto must lie in 1..{len(orbit)}, got {upto}")
    if upto > max_stream:
        raise ValueError(f"streaming capped at {max_stream} indices; "
                         "request larger indices as probes")
    y = np.empty(upto)
    acc = Kahan()
    acc.add(float(np.exp(2.0 * orbit.log_rho[0])))
    y[0] = math.sqrt(acc.value)
    buf = np.empty(upto)
    for n0 in range(1, upto):
        acc.add(2.0 * _row_sum(orbit, 0, n0, buf))
        acc.add(math.exp(2.0 * orbit.log_rho[n0]))
        y[n0] = math.sqrt(acc.value) / (n0 + 1)
    probes = {}
    for p in probe:
        i = _index(orbit, p) + 1
        probes[i] = _mean_norm_direct(orbit, 1, i)
    return CesaroTrace(y_norm=y, probes=probes)


def block_mean_norm(orbit: Orbit, k: int) -> float:
    """||z_k||, the norm of the plain average over block k."""
    if orbit.meta is None:
        raise ValueError("orbit mesh has no block structure")
    k = int(k)
    if not 1 <= k <= orbit.meta.num_blocks:
        raise ValueError(f"block index must lie in 1..{orbit.meta.num_blocks}, got {k}")
    first = int(orbit.meta.starts[k - 1])
    last = int(orbit.meta.block_ends[k - 1])
    return _mean_norm_direct(orbit, first, last)


def cesaro_lower_bound_check(orbit: Orbit, n: int,
                             indices: Sequence[int]) -> tuple[float, float]:
    """(||y_n||, clustered-subset lower bound) at index n.

    The bound is (#I / n) rho_inf_lo exp(-spread^2 / 2) with spread the
    knot diameter of the subset I of 1..n.
    """
    i = _index(orbit, n) + 1
    idx = np.asarray(sorted(set(int(p) for p in indices)), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index subset must be nonempty")
    if idx[0] < 1 or idx[-1] > i:
        raise ValueError(f"index subset must lie inside 1..{n}")
    lhs = _mean_norm_direct(orbit, 1, i)
    tt = orbit.mesh.t[idx - 1]
    spread = float(tt[-1] - tt[0])
    rhs = (idx.size / i) * orbit.rho_inf_lo * math.exp(-0.5 * spread * spread)
    return lhs, rhs


def weak_probe(orbit: Orbit, s: float, n: int) -> float:
    """<u(s), x_n> = rho_n exp(-(s - t_n)^2), the weak-convergence witness."""
    i = _index(orbit, n)
    gap = float(s) - orbit.mesh.t[i]
    return math.exp(orbit.log_rho[i] - gap * gap)


def weak_probe_values(orbit: Orbit, s: float) -> np.ndarray:
    """weak_probe against every orbit index at once."""
    gap = float(s) - orbit.mesh.t
    return np.exp(orbit.log_rho - gap * gap)
