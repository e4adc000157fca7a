"""Lower bounds on the worst-case optimum of an equation-constrained problem.

For an objective ``o`` and a constraint field ``f`` known up to perturbations
of size ``r``, the worst-case optimum is ``OPT(r) = inf max o(x)`` over the
zeros ``x`` of the perturbed fields.  The primary obstruction system is
reduced once with its rows sorted by the objective: after the columns of
filtration value up to ``r`` have been admitted, the objective value of the
lowest row still carrying the right-hand side bounds ``OPT(r)`` from below.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .domain import Z, coboundary, Cochain
from .fields import ObjectiveField, SampledField
from .filtration import CUBICAL
from .obstruction import Options, PaddedColumns, RowIndex, prepare, pullback_cocycle, resolve_options
from .reduction import solvable_prefixes


@dataclass
class OptCurve:
    """Points ``(r, bound)`` with ``bound <= OPT(r)``, nonincreasing in ``r``.

    ``terminated_at`` is the radius from which no robust zero remains (the
    primary persistence), or ``None`` if the curve reaches ``r_max``.
    ``upper`` holds one value per point (``None`` where unavailable) when the
    dimensions allow upper bounds, and is ``None`` otherwise.
    """

    points: list[tuple[float, float]] = field(default_factory=list)
    terminated_at: float | None = None
    mode: str = ""
    start: float = 0.0
    f_alpha: float = 0.0
    o_alpha: float = 0.0
    upper: list[float | None] | None = None

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["r", "opt_lower"] + (["opt_upper"] if self.upper is not None else []))
        for i, (r, b) in enumerate(self.points):
            row = [repr(r), repr(b)]
            if self.upper is not None:
                row.append("" if self.upper[i] is None else repr(self.upper[i]))
            writer.writerow(row)
        if self.terminated_at is not None:
            writer.writerow([repr(self.terminated_at), "end"] + ([""] if self.upper is not None else []))
        return out.getvalue()


def _upper_companion(points: list[tuple[float, float]], slack: float, o_alpha: float) -> list[float | None]:
    """``OPT(r) <= bound(r - slack) + o_alpha``, using the last point at or below ``r - slack``."""
    radii = [r for r, _ in points]
    out: list[float | None] = []
    for r, _ in points:
        k = bisect.bisect_right(radii, r - slack) - 1
        out.append(points[k][1] + o_alpha if k >= 0 else None)
    return out


def _ranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    levels, inverse = np.unique(values, return_inverse=True)
    return levels, inverse.astype(np.int64)


def opt_curve(f: SampledField, objective: ObjectiveField, r_max: float, opts: Options | None = None) -> OptCurve:
    """The lower-bound curve for radii from the simplicial threshold up to ``r_max``."""
    if objective.domain != f.domain:
        raise ValueError("objective and field live on different grids")
    opts = resolve_options(f, opts or Options())
    prep = prepare(f, opts)
    filt, backend = prep.filt, prep.backend
    if r_max < prep.r0_value:
        raise ValueError(f"r_max {r_max} is below the initial level {prep.r0_value}")
    n = f.n
    curve = OptCurve(mode=opts.mode, start=prep.r0_value, f_alpha=f.alpha, o_alpha=objective.alpha)

    o_levels, o_rank = _ranks(objective.values)
    row_ids, row_ranks = backend.cells_by(n, o_rank.reshape(f.domain.shape))
    rows = RowIndex(row_ids, row_ranks, backend.id_bound(n))
    row_value = o_levels[rows.ranks]

    ybar = pullback_cocycle(filt, prep.codes, prep.r0)
    dybar = coboundary(ybar, backend.complex) if n - 1 < f.domain.m else Cochain(n, Z)
    rhs = backend.encode(dybar)
    if not rhs:
        curve.terminated_at = prep.r0_value
        return curve
    ids = list(rhs)
    rhs_entries = (rows(np.array(ids, dtype=np.int64)).tolist(), [rhs[c] for c in ids])

    col_ids, col_ranks = backend.sorted(n - 1)
    col_values = filt.values[col_ranks]
    usable = int(np.searchsorted(col_values, r_max, side="right"))
    cols = PaddedColumns(col_ids[:usable], lambda sub: backend.coboundary_arrays(sub, n - 1), rows)

    def observe(j: int, low: int | None) -> None:
        value = float(col_values[j])
        if low is None:
            curve.terminated_at = value
            return
        level_end = j + 1 == usable or col_ranks[j + 1] != col_ranks[j]
        if level_end and value >= prep.r0_value:
            curve.points.append((value, float(row_value[low])))

    solvable_prefixes(iter(cols), rhs_entries, Z, observe=observe)
    if f.domain.m <= n or n <= 2:
        slack = 3 * f.alpha if opts.mode == CUBICAL else f.alpha
        curve.upper = _upper_companion(curve.points, slack, objective.alpha)
    return curve


def robust_optimum_by_search(f: SampledField, objective: ObjectiveField, r: float, opts: Options | None = None) -> float | None:
    """``max beta`` such that the obstruction survives on the rows with objective ``>= beta``.

    Solves one system per candidate ``beta`` by binary search; an independent
    route to a single curve point, used for cross-checking.
    """
    opts = resolve_options(f, opts or Options())
    prep = prepare(f, opts)
    backend, n = prep.backend, f.n
    o_levels, o_rank = _ranks(objective.values)
    row_ids, row_ranks = backend.cells_by(n, o_rank.reshape(f.domain.shape))
    ybar = pullback_cocycle(prep.filt, prep.codes, prep.r0)
    rhs = backend.encode(coboundary(ybar, backend.complex))
    col_ids, col_ranks = backend.sorted(n - 1)
    keep = col_ids[prep.filt.values[col_ranks] <= r]
    full_rows, full_coefs = backend.coboundary_arrays(keep, n - 1)
    rank_of = dict(zip(row_ids.tolist(), row_ranks.tolist()))

    def survives(beta_rank: int) -> bool:
        # rows with objective rank >= beta_rank; anything else is dropped
        kept = sorted(c for c, k in rank_of.items() if k >= beta_rank)
        pos = {c: i for i, c in enumerate(kept)}
        target = ([pos[c] for c in rhs if c in pos], [v for c, v in rhs.items() if c in pos])
        if not target[0]:
            return False
        columns = []
        for rr, cc in zip(full_rows.tolist(), full_coefs.tolist()):
            pairs = [(pos[a], b) for a, b in zip(rr, cc) if b and a in pos]
            columns.append(([a for a, _ in pairs], [b for _, b in pairs]))
        return solvable_prefixes(columns, target, Z) is None

    lo, hi = 0, len(o_levels) - 1
    if not survives(lo):
        return None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if survives(mid):
            lo = mid
        else:
            hi = mid - 1
    return float(o_levels[lo])
