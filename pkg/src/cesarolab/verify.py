"""Inequality oracles and end-to-end verification suites.

The three standalone checks certify the elementary inequalities the orbit
analysis leans on; the two suites assemble every mesh, radius, firmness,
identity, and mean-norm check for a given construction into a single
VerificationReport with signed margins.

Tolerance policy: identities are held to 1e-12 relative accuracy, true
inequalities get an absolute slack of 1e-13 to absorb rounding, and the
exact-cancellation checks at the limit index are held to 1e-15.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import (BlockMeta, Mesh, PAIR_BUDGET_DEFAULT, _sample_pairs,
                   block_level_deviation, build_block_mesh,
                   build_harmonic_mesh, mesh_level, validate_mesh)
from .orbit import (Orbit, build_orbit, block_mean_norm, cesaro_norms,
                    firm_limit_residuals, firm_residual_pairs,
                    firm_residual_sweep, weak_probe_values)
from .report import VerificationReport, make_record

IDENTITY_RTOL = 1e-12
INEQ_ATOL = 1e-13
LIMIT_ATOL = 1e-15
LEVEL_RTOL = 1e-10

ONE_PLUS_SQRT_PI = 1.0 + math.sqrt(math.pi)
FIRM_SWEEP_LIMIT = 2000
FIRM_SAMPLE_BUDGET = 100_000
GRAM_SAMPLE_BUDGET = 1_000_000


def check_exp_ineq(x: float) -> float:
    """Margin of exp(2x + 16 x^2) <= 1 + 32 x on [0, 1/16]."""
    x = float(x)
    if not 0.0 <= x <= 0.0625:
        raise ValueError(f"x must lie in [0, 1/16], got {x}")
    return (1.0 + 32.0 * x) - math.exp(2.0 * x + 16.0 * x * x)


def exp_ineq_margins(xs: np.ndarray) -> np.ndarray:
    """Vectorized check_exp_ineq."""
    xs = np.asarray(xs, dtype=float)
    if xs.size and (float(np.min(xs)) < 0.0 or float(np.max(xs)) > 0.0625):
        raise ValueError("all grid points must lie in [0, 1/16]")
    return (1.0 + 32.0 * xs) - np.exp(2.0 * xs + 16.0 * xs * xs)


def check_expexp(x: float, y: float) -> float:
    """Margin of exp(x) + exp(-y) <= 2 for 0 <= x <= 1/16, y >= x + 16 x^2."""
    x, y = float(x), float(y)
    if not 0.0 <= x <= 0.0625:
        raise ValueError(f"x must lie in [0, 1/16], got {x}")
    if y < x + 16.0 * x * x:
        raise ValueError(f"need y >= x + 16 x^2, got x = {x}, y = {y}")
    return 2.0 - math.exp(x) - math.exp(-y)


def expexp_margins(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized check_expexp."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size and (float(np.min(xs)) < 0.0 or float(np.max(xs)) > 0.0625):
        raise ValueError("all x must lie in [0, 1/16]")
    if np.any(ys < xs + 16.0 * xs * xs):
        raise ValueError("need y >= x + 16 x^2 for every pair")
    return 2.0 - np.exp(xs) - np.exp(-ys)


def check_sep_sum(points, alpha: float) -> tuple[float, float]:
    """(max row sum of the Gaussian Gram, its separation bound (1+sqrt(pi))/alpha).

    Points must be sorted with consecutive gaps >= alpha, alpha in (0, 1].
    The left side enumerates every pair.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("points must form a nonempty 1-d array")
    if pts.size > 1:
        gaps = np.diff(pts)
        if float(np.min(gaps)) < alpha * (1.0 - 1e-12):
            raise ValueError(
                f"consecutive gaps must be >= alpha = {alpha}, "
                f"smallest is {float(np.min(gaps))}")
    diff = pts[:, None] - pts[None, :]
    rows = np.sum(np.exp(-diff * diff), axis=1)
    return float(np.max(rows)), ONE_PLUS_SQRT_PI / alpha


def sep_sum_bruteforce(points) -> float:
    """Pure-Python double loop over pairs; cross-validates check_sep_sum."""
    pts = [float(p) for p in points]
    best = 0.0
    for a in pts:
        row = math.fsum(math.exp(-(a - b) * (a - b)) for b in pts)
        best = max(best, row)
    return best


# ---------------------------------------------------------------------------
# shared suite pieces

def _rho_records(report: VerificationReport, orbit: Orbit) -> None:
    rho, d = orbit.rho, orbit.mesh.d
    drops = rho[:-1] - rho[1:]
    if drops.size:
        j = int(np.argmin(drops))
        report.add(make_record("rho.monotone", float(drops[j]), 0.0,
                               count=int(drops.size), argmin=j + 1))
        rec = rho[:-1] * np.exp(-d[:-1] * d[:-1])
        rel = np.abs(rho[1:] - rec) / rho[1:]
        report.add(make_record("rho.recursion", -float(np.max(rel)),
                               IDENTITY_RTOL, count=int(rel.size)))
    else:
        report.add(make_record("rho.monotone", 0.0, 0.0, count=0))
        report.add(make_record("rho.recursion", 0.0, IDENTITY_RTOL, count=0))


def _firm_records(report: VerificationReport, orbit: Orbit,
                  rng: np.random.Generator, threads: int) -> None:
    n = len(orbit)
    n_sweep = min(n - 1, FIRM_SWEEP_LIMIT)
    if n_sweep >= 2:
        worst, (m_at, n_at) = firm_residual_sweep(orbit, n_sweep, threads=threads)
        report.add(make_record("firm.pairs", worst, IDENTITY_RTOL,
                               n_max=n_sweep, m=m_at, n=n_at))
    else:
        report.add(make_record("firm.pairs", 0.0, IDENTITY_RTOL, n_max=0))
    if n - 1 > n_sweep:
        ms = rng.integers(1, n - 1, FIRM_SAMPLE_BUDGET)
        u = rng.random(FIRM_SAMPLE_BUDGET)
        ns = ms + 1 + np.floor(u * (n - 1 - ms)).astype(np.int64)
        ns = np.minimum(ns, n - 1)
        vals = firm_residual_pairs(orbit, ms, ns)
        j = int(np.argmin(vals))
        report.add(make_record("firm.pairs_sampled", float(vals[j]),
                               IDENTITY_RTOL, pairs=int(ms.size),
                               m=int(ms[j]), n=int(ns[j])))
    limit = firm_limit_residuals(orbit, n - 1)
    report.add(make_record("firm.limit_point", -float(np.max(np.abs(limit))),
                           LIMIT_ATOL, count=int(limit.size)))


def _identity_records(report: VerificationReport, orbit: Orbit,
                      rng: np.random.Generator, pair_budget: int) -> None:
    lr, t = orbit.log_rho, orbit.mesh.t
    gap = t[1:] - t[:-1]
    fwd = np.exp(lr[:-1] + lr[1:] - gap * gap)
    sq_next = np.exp(2.0 * lr[1:])
    rel = np.abs(fwd - sq_next) / sq_next
    j = int(np.argmax(rel))
    report.add(make_record("orbit.consecutive_inner", -float(rel[j]),
                           IDENTITY_RTOL, count=int(rel.size), argmax=j + 1))
    report.add(make_record("orbit.increment_orthogonal", -float(rel[j]),
                           IDENTITY_RTOL, count=int(rel.size), argmax=j + 1))
    ms, ks, sampled = _sample_pairs(len(orbit),
                                    min(pair_budget, GRAM_SAMPLE_BUDGET), rng)
    pg = t[ks] - t[ms]
    vals = np.exp(lr[ms] + lr[ks] - pg * pg)
    report.add(make_record("orbit.gram_positive", float(np.min(vals)), 0.0,
                           pairs=int(ms.size), sampled=sampled))


def _check_prebuilt(prebuilt: Orbit, kind: str, param: float,
                    length: int | None = None) -> Orbit:
    mesh = prebuilt.mesh
    if mesh.kind != kind or mesh.param != param or \
            (length is not None and len(mesh) != length):
        raise ValueError("prebuilt orbit does not match the requested suite")
    return prebuilt


# ---------------------------------------------------------------------------
# suites

def suite_harmonic(delta: float, n: int, *, seed: int = 0, threads: int = 1,
                   pair_budget: int = PAIR_BUDGET_DEFAULT,
                   prebuilt: Orbit | None = None) -> VerificationReport:
    """Full verification of the harmonic construction d_k = delta/k, k <= n.

    Records mesh admissibility, radius behavior and its limit bracket, the
    firmness sweep with the limit column, the closed-form orbit identities,
    the uniform mean-norm lower bound with its clustering certificate, and
    the weak-convergence probe decay.
    """
    report = VerificationReport(seed=seed)
    mesh = build_harmonic_mesh(delta, n) if prebuilt is None else \
        _check_prebuilt(prebuilt, "harmonic", float(delta), int(n)).mesh
    report.extend(validate_mesh(mesh, pair_budget=pair_budget, seed=seed,
                                threads=threads).records)
    orbit = build_orbit(mesh, validate=False) if prebuilt is None else prebuilt
    rng = np.random.default_rng(seed)
    nn = len(orbit)
    delta = mesh.param

    _rho_records(report, orbit)
    target = math.exp(-(delta * delta) * (math.pi ** 2 / 6.0))
    lo, hi = orbit.rho_inf_bracket
    report.add(make_record("rho.limit_bracket",
                           min(target - lo, hi - target), INEQ_ATOL,
                           lo=lo, hi=hi, target=target))

    _firm_records(report, orbit, rng, threads)
    _identity_records(report, orbit, rng, pair_budget)

    trace = cesaro_norms(orbit, nn)
    report.add(make_record("cesaro.start_norm",
                           -abs(float(trace.y_norm[0]) - 1.0), LIMIT_ATOL))
    bound = 0.5 * math.exp(-(delta * delta) * (math.pi ** 2 + 3.0) / 6.0)
    j = int(np.argmin(trace.y_norm))
    report.add(make_record("cesaro.lower_bound",
                           float(trace.y_norm[j]) - bound, INEQ_ATOL,
                           bound=bound, argmin=j + 1,
                           min_norm=float(trace.y_norm[j])))

    if nn >= 2:
        ns = np.arange(2, nn + 1)
        spread = mesh.t[ns - 1] - mesh.t[ns // 2]
        j = int(np.argmax(spread))
        report.add(make_record("cesaro.upper_half_spread",
                               delta - float(spread[j]), INEQ_ATOL,
                               argmax=int(ns[j]), spread=float(spread[j])))
    else:
        report.add(make_record("cesaro.upper_half_spread", delta, INEQ_ATOL,
                               count=0))

    probe = weak_probe_values(orbit, 0.0)
    drops = probe[:-1] - probe[1:]
    if drops.size:
        j = int(np.argmin(drops))
        report.add(make_record("weak.decay", float(drops[j]), INEQ_ATOL,
                               s=0.0, argmin=j + 1))
    else:
        report.add(make_record("weak.decay", 0.0, INEQ_ATOL, s=0.0, count=0))
    far = probe[mesh.t >= 2.0]
    margin = 0.1 - float(np.max(far)) if far.size else 0.1
    report.add(make_record("weak.tail_threshold", margin, INEQ_ATOL,
                           s=0.0, count=int(far.size)))
    return report


def suite_block(q1: int, num_blocks: int, *, seed: int = 0, threads: int = 1,
                pair_budget: int = PAIR_BUDGET_DEFAULT,
                prebuilt: Orbit | None = None) -> VerificationReport:
    """Full verification of the block construction through `num_blocks` blocks.

    Needs num_blocks >= 2 so boundary jumps and the end-norm trend are
    observable. On top of the shared mesh/radius/firmness/identity records,
    each block gets: the step enclosure 1/(Q_k + 64 w_k) < d_n <= 1/Q_k,
    the first-unit
    count and index bounds, the block-size lower bound, the first-unit knot
    spread, the mean-norm lower bound at j_unit, the block-average bound,
    the mean-norm upper bound at the block end, level constancy inside the
    block, level jumps at boundaries, and the end-norm trend.
    """
    if num_blocks < 2:
        raise ValueError(f"suite_block needs at least 2 blocks, got {num_blocks}")
    report = VerificationReport(seed=seed)
    if prebuilt is None:
        mesh, meta = build_block_mesh(q1, num_blocks)
    else:
        orbit0 = _check_prebuilt(prebuilt, "block", float(q1))
        if orbit0.meta is None or orbit0.meta.num_blocks != num_blocks:
            raise ValueError("prebuilt orbit does not match the requested suite")
        mesh, meta = orbit0.mesh, orbit0.meta
    report.extend(validate_mesh(mesh, pair_budget=pair_budget, seed=seed,
                                threads=threads).records)
    orbit = build_orbit(mesh, meta, validate=False) if prebuilt is None else prebuilt
    rng = np.random.default_rng(seed)
    nn = len(orbit)

    _rho_records(report, orbit)
    lo, hi = orbit.rho_inf_bracket
    floor = math.exp(-(1.0 / (q1 * q1) + 7.0 / 12.0))
    report.add(make_record("rho.tail_positive", lo - floor, INEQ_ATOL,
                           lo=lo, hi=hi, floor=floor))

    _firm_records(report, orbit, rng, threads)
    _identity_records(report, orbit, rng, pair_budget)

    trace = cesaro_norms(orbit, nn)
    level = mesh_level(mesh)
    level_tol = max(INEQ_ATOL, LEVEL_RTOL * float(np.max(np.abs(level))))
    deviations = block_level_deviation(mesh, meta)
    unit_factor = math.exp(-81.0 / 128.0)

    end_norms = []
    for k in range(1, meta.num_blocks + 1):
        w = int(meta.widths[k - 1])
        i_k = int(meta.starts[k - 1])
        q_k = int(meta.q[k - 1])
        e_k = int(meta.block_ends[k - 1])
        j_k = int(meta.unit_ends[k - 1])
        d_blk = mesh.d[i_k - 1:e_k]
        lo_step = 1.0 / (q_k + 64 * w)
        hi_step = 1.0 / q_k
        margin = min(float(np.min(d_blk)) - lo_step,
                     float(np.min(hi_step - d_blk)))
        report.add(make_record("block.step_bounds", margin, INEQ_ATOL,
                               k=k, q=q_k, size=int(e_k - i_k + 1)))
        count_j = j_k - i_k + 1
        report.add(make_record("block.unit_count",
                               float(min(count_j - q_k, q_k + 65 - count_j)),
                               0.0, k=k, count=count_j, q=q_k))
        report.add(make_record("block.unit_index",
                               float(i_k + q_k + 64 - j_k), 0.0,
                               k=k, j_unit=j_k))
        report.add(make_record("block.size",
                               float((e_k - i_k + 1) - w * q_k), 0.0,
                               k=k, size=int(e_k - i_k + 1)))
        spread = float(mesh.t[j_k - 1] - mesh.t[i_k - 1])
        report.add(make_record("block.unit_spread", 1.125 - spread, INEQ_ATOL,
                               k=k, spread=spread))
        z_k = block_mean_norm(orbit, k)
        trace.z_norm[k] = z_k
        zsq_bound = ONE_PLUS_SQRT_PI * (1.0 / w + 64.0 / q_k)
        report.add(make_record("block.mean_sq_bound", zsq_bound - z_k * z_k,
                               INEQ_ATOL, k=k, z_norm=z_k))
        y_unit = float(trace.y_norm[j_k - 1])
        unit_bound = (q_k / (2.0 * q_k + 64.0)) * lo * unit_factor
        report.add(make_record("block.cesaro_at_unit", y_unit - unit_bound,
                               INEQ_ATOL, k=k, y=y_unit, bound=unit_bound))
        y_end = float(trace.y_norm[e_k - 1])
        end_norms.append(y_end)
        report.add(make_record("block.cesaro_at_end",
                               (1.0 / w + z_k) - y_end, INEQ_ATOL,
                               k=k, y=y_end, z_norm=z_k))
        report.add(make_record("block.level_constancy", -float(deviations[k - 1]),
                               LEVEL_RTOL, k=k))

    jumps = level[meta.starts[1:] - 1] - level[meta.starts[1:] - 2]
    j = int(np.argmin(jumps))
    report.add(make_record("block.level_jump", float(jumps[j]), level_tol,
                           count=int(jumps.size), argmin_block=j + 2))
    drops = [a - b for a, b in zip(end_norms, end_norms[1:])]
    report.add(make_record("block.trend", min(drops), INEQ_ATOL,
                           end_norms=end_norms))
    return report
