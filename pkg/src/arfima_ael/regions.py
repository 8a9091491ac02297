"""Confidence-region grids over two parameter coordinates and boundary extraction.

A grid fixes every off-axis coordinate at its Whittle estimate, evaluates the
EL or adjusted-EL statistic on each node, and thresholds at the chi-square
quantile with 2 degrees of freedom. Boundaries come from marching squares with
linear interpolation on the statistic field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from arfima_ael.elratio import AELConfig, ael_stat, chisq_quantile, el_stat
from arfima_ael.model import ModelSpec, ParamVector, validate
from arfima_ael.spectral import Periodogram, periodogram
from arfima_ael.whittle import ParameterBox, WhittleFit, whittle_fit


@dataclass(frozen=True)
class AxisSpec:
    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 10:
            raise ValueError("need at least 10 grid steps per axis")
        if not self.lo < self.hi:
            raise ValueError("axis must satisfy lo < hi")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class RegionGrid:
    axis1: AxisSpec
    axis2: AxisSpec
    fixed: dict
    stats: np.ndarray  # shape (axis1.steps, axis2.steps); +inf infeasible, nan invalid
    valid: np.ndarray
    threshold: float
    method: str
    fit: Optional[WhittleFit] = None

    @property
    def mask(self) -> np.ndarray:
        """Membership: finite statistic at or below the threshold."""
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(self.stats), self.stats <= self.threshold, False)


@dataclass(frozen=True)
class RegionSummary:
    mask: np.ndarray
    area_fraction: float
    area: float
    loops: list
    is_empty: bool


def _beta_from_grid(spec: ModelSpec, names, fixed, axis_names, v1, v2) -> ParamVector:
    coords = dict(fixed)
    coords[axis_names[0]] = v1
    coords[axis_names[1]] = v2
    arr = np.array([coords[name] for name in names])
    return ParamVector.from_array(arr, spec)


def evaluate_grid(series, spec: ModelSpec, axes: tuple[AxisSpec, AxisSpec],
                  method: str = "AEL", level: float = 0.95,
                  ael_cfg: AELConfig = AELConfig(), jobs: int = 1,
                  box: Optional[ParameterBox] = None) -> RegionGrid:
    """Fit Whittle once, then fill the statistic over the 2-D grid.

    Off-axis coordinates are plugged in at their Whittle estimates. Grid nodes
    with invalid parameters are marked invalid and skipped; infeasible EL nodes
    carry +inf and render outside any region.
    """
    axis1, axis2 = axes
    if axis1.name == axis2.name:
        raise ValueError("axes must name two distinct coordinates")
    if method not in ("EL", "AEL"):
        raise ValueError(f"method must be EL or AEL, got {method!r}")
    names = spec.param_names()
    for ax in axes:
        if ax.name not in names:
            raise ValueError(f"unknown coordinate {ax.name!r}; choose from {names}")

    pgram = series if isinstance(series, Periodogram) else periodogram(series)
    fit = whittle_fit(spec, pgram, box=box)
    if not fit.converged:
        raise RuntimeError(f"Whittle fit did not converge: {fit.message} "
                           f"(score norm {fit.score_norm:.3e} after {fit.iterations} iterations)")
    est = dict(zip(names, fit.beta_hat.to_array()))
    fixed = {name: est[name] for name in names if name not in (axis1.name, axis2.name)}

    v1 = axis1.values()
    v2 = axis2.values()
    axis_names = (axis1.name, axis2.name)

    def cell(i, j):
        beta = _beta_from_grid(spec, names, fixed, axis_names, v1[i], v2[j])
        if not validate(spec, beta).ok:
            return np.nan, False
        if method == "EL":
            sol = el_stat(spec, beta, pgram)
        else:
            sol = ael_stat(spec, beta, pgram, ael_cfg)
        if sol.status == "converged":
            return sol.stat, True
        if sol.status == "infeasible":
            return np.inf, True
        return np.nan, True  # numerical max-iter: reported, excluded from region

    pairs = [(i, j) for i in range(axis1.steps) for j in range(axis2.steps)]
    if jobs == 1:
        results = [cell(i, j) for i, j in pairs]
    else:
        results = Parallel(n_jobs=jobs, batch_size=256)(delayed(cell)(i, j) for i, j in pairs)

    stats = np.empty((axis1.steps, axis2.steps))
    valid = np.empty((axis1.steps, axis2.steps), dtype=bool)
    for (i, j), (stat, ok) in zip(pairs, results):
        stats[i, j] = stat
        valid[i, j] = ok

    return RegionGrid(axis1=axis1, axis2=axis2, fixed=fixed, stats=stats, valid=valid,
                      threshold=chisq_quantile(2, level), method=method, fit=fit)


# marching-squares segment table: corner bits A=(i,j), B=(i+1,j), C=(i+1,j+1),
# D=(i,j+1); edges 0=AB, 1=BC, 2=CD, 3=DA; cases 5 and 10 resolved by the
# cell-center average
_SEGMENTS = {
    0: [], 15: [],
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
    11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}


def _edge_point(edge, i, j, f, level):
    f00, f10, f11, f01 = f
    if edge == 0:
        t = (level - f00) / (f10 - f00)
        return (i + t, j)
    if edge == 1:
        t = (level - f10) / (f11 - f10)
        return (i + 1, j + t)
    if edge == 2:
        t = (level - f11) / (f01 - f11)
        return (i + 1 - t, j + 1)
    t = (level - f01) / (f00 - f01)
    return (i, j + 1 - t)


def _marching_squares(field: np.ndarray, level: float) -> list:
    """Threshold-crossing segments of the sub-level set, in index coordinates."""
    n1, n2 = field.shape
    segments = []
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            f = (field[i, j], field[i + 1, j], field[i + 1, j + 1], field[i, j + 1])
            bits = (f[0] <= level) | ((f[1] <= level) << 1) | ((f[2] <= level) << 2) \
                | ((f[3] <= level) << 3)
            if bits in (5, 10):
                center_in = np.mean(f) <= level
                if bits == 5:
                    pairs = [(0, 1), (2, 3)] if center_in else [(3, 0), (1, 2)]
                else:
                    pairs = [(3, 0), (1, 2)] if center_in else [(0, 1), (2, 3)]
            else:
                pairs = _SEGMENTS[bits]
            for e1, e2 in pairs:
                segments.append((_edge_point(e1, i, j, f, level),
                                 _edge_point(e2, i, j, f, level)))
    return segments


def _chain_segments(segments: list) -> list:
    """Join crossing segments into polylines (closed loops or open chains)."""
    def key(pt):
        return (round(pt[0], 9), round(pt[1], 9))

    adjacency: dict = {}
    for idx, (a, b) in enumerate(segments):
        adjacency.setdefault(key(a), []).append((idx, a, b))
        adjacency.setdefault(key(b), []).append((idx, b, a))

    used = [False] * len(segments)
    chains = []

    def walk(start_pt):
        chain = [start_pt]
        current = key(start_pt)
        while True:
            nxt = None
            for idx, here, there in adjacency.get(current, []):
                if not used[idx]:
                    nxt = (idx, there)
                    break
            if nxt is None:
                return chain
            used[nxt[0]] = True
            chain.append(nxt[1])
            current = key(nxt[1])

    # open chains first (endpoints with odd degree), then remaining cycles
    for pt_key, incident in adjacency.items():
        free = [entry for entry in incident if not used[entry[0]]]
        if len(free) % 2 == 1:
            chains.append(walk(free[0][1]))
    for idx, (a, b) in enumerate(segments):
        if not used[idx]:
            chains.append(walk(a))
    return [c for c in chains if len(c) >= 2]


def extract_region(grid: RegionGrid) -> RegionSummary:
    """Member mask, area, and interpolated boundary polylines of the region."""
    mask = grid.mask
    frac = float(mask.sum()) / mask.size
    box_area = (grid.axis1.hi - grid.axis1.lo) * (grid.axis2.hi - grid.axis2.lo)

    finite = np.isfinite(grid.stats)
    if finite.any():
        span = max(float(np.nanmax(grid.stats[finite])) - grid.threshold, 1.0)
    else:
        span = 1.0
    field = np.where(finite, grid.stats, grid.threshold + 3.0 * span)

    v1 = grid.axis1.values()
    v2 = grid.axis2.values()
    step1 = v1[1] - v1[0]
    step2 = v2[1] - v2[0]
    loops = []
    for chain in _chain_segments(_marching_squares(field, grid.threshold)):
        pts = np.array([(v1[0] + x * step1, v2[0] + y * step2) for x, y in chain])
        loops.append(pts)

    return RegionSummary(mask=mask, area_fraction=frac, area=frac * box_area,
                         loops=loops, is_empty=not mask.any())


def grid_to_rows(grid: RegionGrid):
    """Long-format rows (axis1, axis2, stat, member) for CSV export."""
    v1 = grid.axis1.values()
    v2 = grid.axis2.values()
    mask = grid.mask
    rows = []
    for i in range(grid.axis1.steps):
        for j in range(grid.axis2.steps):
            rows.append((v1[i], v2[j], grid.stats[i, j], int(mask[i, j])))
    return rows
