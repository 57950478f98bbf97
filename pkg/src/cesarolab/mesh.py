"""Step-size meshes driving the orbit construction.

Two admissible families are provided.  The harmonic mesh uses steps
d_n = delta/n with delta in (0, 1/8].  The block mesh is built iteratively:
inside block k the contraction d_{n+1} = d_n / (1 + 64 d_n^2) applies, and
the block is left as soon as the knots have advanced by the block width
w_k = k + 1, at which point the step restarts at 1/Q_{k+1} for an integer
parameter Q_{k+1} chosen large enough to keep every admissibility condition.

Knots satisfy t_1 = 0 and t_{n+1} = t_n + d_n, accumulated with compensated
summation.  Exact-rational twins of both builders double as debugging
oracles on short prefixes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .report import CheckRecord, VerificationReport, make_record
from .util import Kahan, chunk_ranges, map_ordered

MAX_FIRST_STEP = 0.125
PAIR_BUDGET_DEFAULT = 4_000_000

INEQ_ATOL = 1e-13       # absolute slack absorbing rounding in true inequalities
LEVEL_RTOL = 1e-10      # relative slack on the level 1/d - 64 t


class MeshInvalidError(ValueError):
    """Raised when a mesh fails validation and the caller required validity."""


def _next_step(d: float) -> float:
    """One in-block update d -> d / (1 + 64 d^2)."""
    return d / (1.0 + 64.0 * d * d)


@dataclass(frozen=True)
class Mesh:
    """Steps d_1..d_N and knots t_1..t_N (arrays are 0-based, indices 1-based)."""

    d: np.ndarray
    t: np.ndarray
    kind: str           # "harmonic" or "block"
    param: float        # delta for harmonic, Q_1 for block

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(np.asarray(self.d, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.t, dtype=float))
        if d.size == 0 or d.shape != t.shape or d.ndim != 1:
            raise ValueError("mesh needs matching nonempty 1-d step and knot arrays")
        d.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "t", t)

    def __len__(self) -> int:
        return int(self.d.size)

    @property
    def knots_next(self) -> np.ndarray:
        """t_{n+1} for n = 1..N; the final entry extends past the stored knots."""
        return np.append(self.t[1:], self.t[-1] + self.d[-1])


@dataclass(frozen=True)
class BlockMeta:
    """Block layout of a block mesh; all index fields are 1-based."""

    widths: np.ndarray      # w_k = k + 1
    starts: np.ndarray      # i(k), first index of block k, i(1) = 1
    q: np.ndarray           # integer parameter Q_k of block k
    block_ends: np.ndarray  # last index of block k
    unit_ends: np.ndarray   # first n in block k with t_n >= t_{i(k)} + 1

    def __post_init__(self) -> None:
        for name in ("widths", "starts", "q", "block_ends", "unit_ends"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.int64))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_blocks(self) -> int:
        return int(self.q.size)

    @property
    def sizes(self) -> np.ndarray:
        """#I_k, number of indices in block k."""
        return self.block_ends - self.starts + 1

    @property
    def unit_counts(self) -> np.ndarray:
        """#J_k, indices of block k up to and including the first unit of width."""
        return self.unit_ends - self.starts + 1

    def block_of(self, n: int) -> int:
        """Block index k with n in I_k."""
        k = int(np.searchsorted(self.block_ends, n, side="left")) + 1
        if n < 1 or k > self.num_blocks:
            raise IndexError(f"index {n} outside the meshed blocks")
        return k


def build_harmonic_mesh(delta: float, n: int) -> Mesh:
    """Harmonic mesh d_k = delta/k, k = 1..n, with compensated knots."""
    delta = float(delta)
    if not 0.0 < delta <= MAX_FIRST_STEP:
        raise ValueError(f"delta must lie in (0, 1/8], got {delta}")
    n = int(n)
    if n < 1:
        raise ValueError(f"mesh length must be >= 1, got {n}")
    d = delta / np.arange(1.0, n + 1.0)
    t = np.empty(n)
    t[0] = 0.0
    acc = Kahan()
    for i in range(1, n):
        acc.add(d[i - 1])
        t[i] = acc.value
    return Mesh(d=d, t=t, kind="harmonic", param=delta)


def _pick_q(k_old: int, i_next: int, d_prev: float,
            overrides: Mapping[int, int] | None) -> int:
    """Choose Q_{k+1}: the minimal admissible integer unless overridden upward.

    Admissible means at least max{i(k+1), 2^(k+2) * w_{k+1}, (1+64 d^2)/d}
    with d the last step of the finished block.
    """
    w_next = k_old + 2
    c_growth = (1 << (k_old + 2)) * w_next
    c_step = (1.0 + 64.0 * d_prev * d_prev) / d_prev
    q_min = max(i_next, c_growth, math.ceil(c_step))
    if overrides and (k_old + 1) in overrides:
        q = int(overrides[k_old + 1])
        if q < q_min:
            raise ValueError(
                f"override Q_{k_old + 1}={q} below the admissible minimum {q_min}")
        return q
    return int(q_min)


def build_block_mesh(q1: int, num_blocks: int = 1,
                     q_overrides: Mapping[int, int] | None = None,
                     ) -> tuple[Mesh, BlockMeta]:
    """Build the block mesh through the end of block `num_blocks`.

    Block k has width w_k = k + 1 and starts at step 1/Q_k.  The mesh is
    truncated at the last index of the final block; the metadata records the
    block layout, the chosen Q_k, and the first-unit indices.
    """
    if isinstance(q1, bool) or not isinstance(q1, (int, np.integer)):
        raise TypeError(f"q1 must be an integer, got {type(q1).__name__}")
    q1 = int(q1)
    if q1 < 8:
        raise ValueError(f"q1 must be >= 8, got {q1}")
    num_blocks = int(num_blocks)
    if num_blocks < 1:
        raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")

    ds = [1.0 / q1]
    ts = [0.0]
    starts = [1]
    qs = [q1]
    ends: list[int] = []
    acc = Kahan()
    k = 1
    t_start = 0.0
    while True:
        d_cur = ds[-1]
        acc.add(d_cur)
        t_next = acc.value
        if t_next < t_start + (k + 1):
            ts.append(t_next)
            ds.append(_next_step(d_cur))
        else:
            ends.append(len(ds))
            if k == num_blocks:
                break
            i_next = len(ds) + 1
            q_next = _pick_q(k, i_next, d_cur, q_overrides)
            starts.append(i_next)
            qs.append(q_next)
            ts.append(t_next)
            ds.append(1.0 / q_next)
            t_start = t_next
            k += 1

    t_arr = np.array(ts)
    unit_ends = []
    for i_k, e_k in zip(starts, ends):
        threshold = t_arr[i_k - 1] + 1.0
        offset = int(np.searchsorted(t_arr[i_k - 1:e_k], threshold, side="left"))
        unit_ends.append(i_k + offset)

    mesh = Mesh(d=np.array(ds), t=t_arr, kind="block", param=float(q1))
    meta = BlockMeta(
        widths=np.arange(2, num_blocks + 2),
        starts=np.array(starts),
        q=np.array(qs),
        block_ends=np.array(ends),
        unit_ends=np.array(unit_ends),
    )
    return mesh, meta


def mesh_level(mesh: Mesh) -> np.ndarray:
    """Level L_n = 1/d_n - 64 t_n; nondecreasing on admissible meshes."""
    return 1.0 / mesh.d - 64.0 * mesh.t


def block_level_deviation(mesh: Mesh, meta: BlockMeta) -> np.ndarray:
    """Per block: max relative deviation of the level from its block-start value."""
    level = mesh_level(mesh)
    out = np.empty(meta.num_blocks)
    for j, (i_k, e_k) in enumerate(zip(meta.starts, meta.block_ends)):
        ref = level[i_k - 1]
        out[j] = float(np.max(np.abs(level[i_k - 1:e_k] - ref)) / abs(ref))
    return out


def step_condition_forms(mesh: Mesh, tol: float = 1e-12) -> dict[str, np.ndarray]:
    """Per-index pass flags of the three equivalent step-decay conditions.

    ratio_form     d_{n+1} <= d_n / (1 + 64 d_n^2)
    inverse_form   1/d_{n+1} - 1/d_n >= 64 d_n
    level_form     L_{n+1} >= L_n with L = 1/d - 64 t

    All margins are normalized by the local step so one relative tolerance
    makes the three verdicts comparable.
    """
    d, t = mesh.d, mesh.t
    if d.size < 2:
        empty = np.zeros(0, dtype=bool)
        return {"ratio_form": empty, "inverse_form": empty, "level_form": empty}
    d0, d1 = d[:-1], d[1:]
    level = 1.0 / d - 64.0 * t
    m_ratio = (d0 / (1.0 + 64.0 * d0 * d0) - d1) / d0
    m_inverse = ((1.0 / d1 - 1.0 / d0) - 64.0 * d0) * d0
    m_level = (level[1:] - level[:-1]) * d0
    return {
        "ratio_form": m_ratio >= -tol,
        "inverse_form": m_inverse >= -tol,
        "level_form": m_level >= -tol,
    }


def _sample_pairs(n: int, budget: int, rng: np.random.Generator,
                  strata: int = 16) -> tuple[np.ndarray, np.ndarray, bool]:
    """0-based index pairs (m, k) with m < k: all of them when affordable,
    else every adjacent pair plus a stratified random draw."""
    total = n * (n - 1) // 2
    if total <= budget:
        ms, ks = np.triu_indices(n, k=1)
        return ms.astype(np.int64), ks.astype(np.int64), False
    ms_parts = [np.arange(n - 1, dtype=np.int64)]
    ks_parts = [np.arange(1, n, dtype=np.int64)]
    remaining = max(0, budget - (n - 1))
    strata = min(strata, n - 1)
    per_stratum = remaining // max(1, strata)
    edges = np.linspace(0, n - 1, strata + 1).astype(np.int64)
    for s in range(strata):
        lo, hi = int(edges[s]), int(edges[s + 1])
        if hi <= lo:
            continue
        m = rng.integers(lo, hi, per_stratum)
        u = rng.random(per_stratum)
        k = m + 1 + np.floor(u * (n - 1 - m)).astype(np.int64)
        ms_parts.append(m)
        ks_parts.append(np.minimum(k, n - 1))
    ms_parts.append(np.array([0, 0, n - 2], dtype=np.int64))
    ks_parts.append(np.array([n - 1, 1, n - 1], dtype=np.int64))
    return np.concatenate(ms_parts), np.concatenate(ks_parts), True


def _worst_over_chunks(margins_for, n_pairs: int, threads: int,
                       chunk: int = 1 << 18) -> tuple[float, int]:
    """Minimum margin and its global pair index across ordered chunks."""
    def one(lo: int, hi: int) -> tuple[float, int]:
        vals = margins_for(lo, hi)
        j = int(np.argmin(vals))
        return float(vals[j]), lo + j

    results = map_ordered(one, chunk_ranges(n_pairs, chunk), threads)
    best = min(results, key=lambda r: r[0])
    return best


def validate_mesh(mesh: Mesh, tol: float = INEQ_ATOL, *,
                  pair_budget: int = PAIR_BUDGET_DEFAULT, seed: int = 0,
                  threads: int = 1) -> VerificationReport:
    """Check every mesh admissibility condition; failures are recorded, not thrown.

    Single-index checks cover all n; pairwise checks cover all pairs up to
    `pair_budget` and a seeded stratified sample beyond that.  Vacuous checks
    (too few indices) record margin 0 with count 0.
    """
    d, t = mesh.d, mesh.t
    n = len(mesh)
    t_next = mesh.knots_next
    level = mesh_level(mesh)
    level_tol = max(tol, LEVEL_RTOL * float(np.max(np.abs(level))))
    report = VerificationReport(seed=seed)

    report.add(make_record("mesh.first_step", MAX_FIRST_STEP - d[0], tol, n=n))

    telescope = np.abs(t[1:] - t[:-1] - d[:-1]) / np.maximum(1.0, t[1:]) \
        if n > 1 else np.zeros(0)
    resid = max(abs(t[0]), float(np.max(telescope)) if telescope.size else 0.0)
    report.add(make_record("mesh.knot_telescoping", -resid, tol, count=n))

    if n > 1:
        gaps = d[:-1] - d[1:]
        j = int(np.argmin(gaps))
        report.add(make_record("mesh.steps_decreasing", float(gaps[j]), 0.0,
                               count=n - 1, argmin=j + 1))
        ratio_margins = d[:-1] / (1.0 + 64.0 * d[:-1] * d[:-1]) - d[1:]
        j = int(np.argmin(ratio_margins))
        report.add(make_record("mesh.step_ratio", float(ratio_margins[j]), tol,
                               count=n - 1, argmin=j + 1))
    else:
        report.add(make_record("mesh.steps_decreasing", 0.0, 0.0, count=0))
        report.add(make_record("mesh.step_ratio", 0.0, tol, count=0))

    report.add(make_record("mesh.steps_positive", float(np.min(d)), 0.0, count=n))

    product_margins = 0.03125 - d * t_next
    j = int(np.argmin(product_margins))
    report.add(make_record("mesh.knot_product", float(product_margins[j]), tol,
                           count=n, argmin=j + 1))

    if n > 1:
        rng = np.random.default_rng(seed)
        ms, ks, sampled = _sample_pairs(n, pair_budget, rng)
        inv = 1.0 / d

        def gap_margins(lo: int, hi: int) -> np.ndarray:
            m, k = ms[lo:hi], ks[lo:hi]
            return (inv[k] - inv[m]) - 64.0 * (t[k] - t[m])

        worst, at = _worst_over_chunks(gap_margins, ms.size, threads)
        report.add(make_record("mesh.pair_gap", worst, level_tol,
                               pairs=int(ms.size), sampled=sampled,
                               m=int(ms[at]) + 1, n=int(ks[at]) + 1))

        def exp_margins(lo: int, hi: int) -> np.ndarray:
            m, k = ms[lo:hi], ks[lo:hi]
            gap = t_next[k] - t_next[m]
            return -(np.expm1(2.0 * d[k] * gap) + np.expm1(-2.0 * d[m] * gap))

        worst, at = _worst_over_chunks(exp_margins, ms.size, threads)
        report.add(make_record("mesh.two_sided_exp", worst, tol,
                               pairs=int(ms.size), sampled=sampled,
                               m=int(ms[at]) + 1, n=int(ks[at]) + 1))
    else:
        report.add(make_record("mesh.pair_gap", 0.0, level_tol, pairs=0, sampled=False))
        report.add(make_record("mesh.two_sided_exp", 0.0, tol, pairs=0, sampled=False))

    return report


def ensure_valid(mesh: Mesh, **kwargs) -> VerificationReport:
    """validate_mesh, raising MeshInvalidError on any failed record."""
    rep = validate_mesh(mesh, **kwargs)
    if not rep.all_passed:
        bad = ", ".join(r.check_id for r in rep.failures)
        raise MeshInvalidError(f"mesh failed validation: {bad}")
    return rep


# ---------------------------------------------------------------------------
# exact-rational twins (debugging oracles)

def harmonic_mesh_fractions(delta: Fraction | str | int,
                            n: int) -> tuple[list[Fraction], list[Fraction]]:
    """Exact harmonic mesh; practical for a few thousand indices."""
    delta = Fraction(delta)
    if not Fraction(0) < delta <= Fraction(1, 8):
        raise ValueError(f"delta must lie in (0, 1/8], got {delta}")
    n = int(n)
    if n < 1:
        raise ValueError(f"mesh length must be >= 1, got {n}")
    ds = [delta / k for k in range(1, n + 1)]
    ts = [Fraction(0)]
    for k in range(1, n):
        ts.append(ts[-1] + ds[k - 1])
    return ds, ts


def block_mesh_fractions(q1: int, max_steps: int,
                         ) -> tuple[list[Fraction], list[Fraction], list[int]]:
    """Exact block-mesh prefix of at most `max_steps` indices.

    The in-block update roughly doubles the operand bit-size per step
    (20 steps is already ~3e5 bits), so only short prefixes are feasible;
    max_steps is capped at 22, which takes a few seconds.
    """
    q1 = int(q1)
    if q1 < 8:
        raise ValueError(f"q1 must be >= 8, got {q1}")
    max_steps = int(max_steps)
    if not 1 <= max_steps <= 22:
        raise ValueError("max_steps must lie in [1, 22]; the exact update "
                         "doubles bit-size per step")
    ds = [Fraction(1, q1)]
    ts = [Fraction(0)]
    qs = [q1]
    k = 1
    t_start = Fraction(0)
    while len(ds) < max_steps:
        d_cur = ds[-1]
        t_next = ts[-1] + d_cur
        if t_next < t_start + (k + 1):
            ts.append(t_next)
            ds.append(d_cur / (1 + 64 * d_cur * d_cur))
        else:
            i_next = len(ds) + 1
            c_step = (1 + 64 * d_cur * d_cur) / d_cur
            q_next = max(i_next, (1 << (k + 2)) * (k + 2),
                         -((-c_step.numerator) // c_step.denominator))
            qs.append(int(q_next))
            ts.append(t_next)
            ds.append(Fraction(1, q_next))
            t_start = t_next
            k += 1
    return ds, ts, qs


# ---------------------------------------------------------------------------
# delimited exports

def write_mesh_csv(mesh: Mesh, path: str | Path,
                   meta: BlockMeta | None = None) -> None:
    """CSV with header n,d,t,block; the block column is empty without metadata."""
    blocks = [""] * len(mesh)
    if meta is not None:
        for k, (i_k, e_k) in enumerate(zip(meta.starts, meta.block_ends), start=1):
            for idx in range(i_k, e_k + 1):
                blocks[idx - 1] = str(k)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "d", "t", "block"])
        for i in range(len(mesh)):
            writer.writerow([i + 1, repr(float(mesh.d[i])),
                             repr(float(mesh.t[i])), blocks[i]])


def write_mesh_json(mesh: Mesh, path: str | Path,
                    meta: BlockMeta | None = None) -> None:
    rows = []
    for i in range(len(mesh)):
        row = {"n": i + 1, "d": float(mesh.d[i]), "t": float(mesh.t[i])}
        row["block"] = meta.block_of(i + 1) if meta is not None else None
        rows.append(row)
    text = json.dumps(rows, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_blockmeta_csv(meta: BlockMeta, path: str | Path) -> None:
    """CSV with header k,w,i,Q,block_end,j_unit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "w", "i", "Q", "block_end", "j_unit"])
        for k in range(meta.num_blocks):
            writer.writerow([k + 1, int(meta.widths[k]), int(meta.starts[k]),
                             int(meta.q[k]), int(meta.block_ends[k]),
                             int(meta.unit_ends[k])])
