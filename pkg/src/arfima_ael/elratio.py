"""Empirical likelihood and adjusted-EL ratio statistics for the Whittle moments.

The inner problem finds the multiplier xi zeroing sum_j psi_j / (1 + xi'psi_j),
equivalently minimizing the convex dual f(xi) = -sum_j ln(1 + xi'psi_j) on
{xi : 1 + xi'psi_j > 1/m for all j}. W(beta) = 2 sum ln(1 + xi'psi_j) over the
n rows; the adjusted statistic appends the pseudo-row -a_n * mean(psi), which
puts zero inside the convex hull so a solution always exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.stats import chi2

from arfima_ael.model import ModelSpec, ParamVector
from arfima_ael.simulate import child_seed, innovation_family, simulate_arfima
from arfima_ael.spectral import Periodogram, periodogram
from arfima_ael.whittle import whittle_fit, psi_matrix

CONVERGED = "converged"
INFEASIBLE = "infeasible"
MAX_ITER = "max-iter"

# status == converged only when the weighted moment sum ||sum p_j psi_j||
# lands below this absolute norm
MOMENT_TOL = 1e-9


@dataclass(frozen=True)
class ELSolution:
    xi: np.ndarray
    weights: np.ndarray
    stat: float
    status: str

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        xi.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class AELConfig:
    """Pseudo-observation scale rule: max(1, log(n)/2), log(n)/2, or a fixed value."""

    a_n_rule: str = "max1-halflog"
    fixed: Optional[float] = None

    def __post_init__(self) -> None:
        if self.a_n_rule not in ("max1-halflog", "halflog", "fixed"):
            raise ValueError(f"unknown a_n rule {self.a_n_rule!r}")
        if self.a_n_rule == "fixed" and (self.fixed is None or self.fixed <= 0):
            raise ValueError("fixed rule needs a positive value")

    def a_n(self, n: int) -> float:
        if self.a_n_rule == "max1-halflog":
            return max(1.0, math.log(n) / 2.0)
        if self.a_n_rule == "halflog":
            return math.log(n) / 2.0
        return float(self.fixed)


def _certify_separated(rows: np.ndarray) -> bool:
    """True when an LP finds u with psi_j'u <= -1 for all j (0 outside the hull)."""
    k = rows.shape[1]
    res = linprog(c=np.zeros(k), A_ub=rows, b_ub=-np.ones(rows.shape[0]),
                  bounds=[(None, None)] * k, method="highs")
    return res.status == 0


def _one_signed_column(rows: np.ndarray) -> bool:
    """Cheap separation screen: some coordinate keeps a strict sign on all rows."""
    return bool(np.any(np.all(rows > 0, axis=0) | np.all(rows < 0, axis=0)))


def _llog(x: np.ndarray, eps: float) -> np.ndarray:
    """ln(x) for x >= eps, quadratic extension below (Owen's pseudo-logarithm)."""
    low = x < eps
    out = np.log(np.where(low, 1.0, x))
    if np.any(low):
        xl = x[low]
        out[low] = math.log(eps) - 1.5 + 2.0 * xl / eps - xl * xl / (2.0 * eps * eps)
    return out


def _dllog(x: np.ndarray, eps: float) -> np.ndarray:
    low = x < eps
    out = 1.0 / np.where(low, 1.0, x)
    if np.any(low):
        out[low] = 2.0 / eps - x[low] / (eps * eps)
    return out


def _d2llog(x: np.ndarray, eps: float) -> np.ndarray:
    low = x < eps
    out = -1.0 / np.where(low, 1.0, x) ** 2
    if np.any(low):
        out[low] = -1.0 / (eps * eps)
    return out


def solve_lagrange(psi_rows: np.ndarray, max_iter: int = 200) -> ELSolution:
    """Damped Newton on the dual problem; stat is left unfilled (nan).

    The dual sum of -ln(1 + xi'psi_j) over {xi : 1 + xi'psi_j > 1/m} is
    minimized through its pseudo-logarithm extension, which agrees with the
    true objective on that open set, stays smooth and convex outside it, and
    is coercive exactly when 0 lies inside the convex hull of the rows. Escape
    to infinity is therefore the infeasibility signal; a linear-programming
    separation certificate confirms it. Returns status converged with weights
    p_j = [m(1 + xi'psi_j)]^{-1}, infeasible, or max-iter.
    """
    rows = np.asarray(psi_rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("psi_rows must be a 2-D matrix")
    m, k = rows.shape
    if m <= k:
        raise ValueError(f"need at least k+1 = {k + 1} rows, got {m}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("psi rows must be finite")

    eps = 1.0 / m
    scale = max(1.0, np.abs(rows).max())
    xi = np.zeros(k)
    r = np.ones(m)

    def finish(status):
        weights = 1.0 / (m * r)
        return ELSolution(xi=xi, weights=weights, stat=np.nan, status=status)

    def true_solution() -> bool:
        if np.min(r) <= eps:
            return False
        moment = (rows / r[:, None]).sum(axis=0)
        psum = np.sum(1.0 / (m * r))
        return np.linalg.norm(moment) <= MOMENT_TOL * m and abs(psum - 1.0) <= 1e-10

    if _one_signed_column(rows):
        return finish(INFEASIBLE)

    f = -np.sum(_llog(r, eps))
    for _ in range(max_iter):
        dl = _dllog(r, eps)
        grad = -(dl[:, None] * rows).sum(axis=0)
        if np.linalg.norm(grad) <= 1e-14 * m * scale:
            break
        curv = -_d2llog(r, eps)
        hw = rows * np.sqrt(curv)[:, None]
        hess = hw.T @ hw
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(hess + 1e-10 * scale**2 * np.eye(k), -grad)

        descent = grad @ step
        if abs(descent) <= 1e-12 * max(1.0, abs(f)):
            # terminal regime: the predicted decrease is below f's floating
            # point resolution, so Armijo cannot measure progress; the pure
            # Newton step still contracts the gradient quadratically and the
            # pseudo-logarithm keeps any step admissible
            cand = xi + step
            r_new = 1.0 + rows @ cand
            f_new = -np.sum(_llog(r_new, eps))
            if np.array_equal(cand, xi):
                break
        else:
            t = 1.0
            moved = False
            for _ in range(50):
                cand = xi + t * step
                r_new = 1.0 + rows @ cand
                f_new = -np.sum(_llog(r_new, eps))
                if f_new <= f + 1e-4 * t * descent:
                    moved = True
                    break
                t *= 0.5
            if not moved:
                break
        xi, r, f = cand, r_new, f_new
        if np.linalg.norm(xi) * scale > 1e9:
            break

    if true_solution():
        return finish(CONVERGED)
    if _certify_separated(rows):
        return finish(INFEASIBLE)
    return finish(MAX_ITER)


def _fill_stat(sol: ELSolution, rows: np.ndarray) -> ELSolution:
    if sol.status == CONVERGED:
        stat = float(2.0 * np.sum(np.log1p(rows @ sol.xi)))
        stat = max(stat, 0.0)
    elif sol.status == INFEASIBLE:
        stat = np.inf
    else:
        stat = np.nan
    return ELSolution(xi=sol.xi, weights=sol.weights, stat=stat, status=sol.status)


def el_stat(spec: ModelSpec, beta: ParamVector, pgram: Periodogram) -> ELSolution:
    """W(beta) = 2 sum ln(1 + xi'psi_j); infeasible yields stat = +inf."""
    rows = psi_matrix(spec, beta, pgram).rows
    return _fill_stat(solve_lagrange(rows), rows)


def ael_augment(psi_rows: np.ndarray, cfg: AELConfig = AELConfig()) -> np.ndarray:
    """Append the pseudo-row -a_n * columnwise mean; output has n+1 rows."""
    rows = np.asarray(psi_rows, dtype=float)
    n = rows.shape[0]
    if n < 1:
        raise ValueError("need at least one row")
    pseudo = -cfg.a_n(n) * rows.mean(axis=0)
    return np.vstack([rows, pseudo])


def ael_stat(spec: ModelSpec, beta: ParamVector, pgram: Periodogram,
             cfg: AELConfig = AELConfig()) -> ELSolution:
    """Adjusted statistic over the n+1 augmented rows; always solvable."""
    rows = ael_augment(psi_matrix(spec, beta, pgram).rows, cfg)
    return _fill_stat(solve_lagrange(rows), rows)


def chisq_quantile(k: int, level: float) -> float:
    """Inverse chi-square CDF with k degrees of freedom."""
    if k < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return float(chi2.ppf(level, df=k))


@dataclass(frozen=True)
class BartlettFactor:
    b: float
    mode: str
    reps: int
    dropped: int
    unreliable: bool


def bartlett_factor(spec: ModelSpec, beta_ref: Optional[ParamVector], T: int,
                    family="gaussian", mode: str = "theoretical", reps: int = 500,
                    seed: int = 0, pgram: Optional[Periodogram] = None) -> BartlettFactor:
    """Mean-matching factor b = k / mean(W) from a parametric bootstrap.

    theoretical: simulate from and evaluate at the supplied true beta.
    estimated: fit beta from ``pgram`` when beta_ref is not given, then
    simulate from and evaluate at that fit. The corrected decision rule is
    reject iff b * W > chi-square quantile. Infeasible replicates are dropped
    and counted; more than 20% dropped flags the factor unreliable.
    """
    if reps < 200:
        raise ValueError("need at least 200 bootstrap replicates")
    if mode not in ("theoretical", "estimated"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(family, str):
        family = innovation_family(family)
    if mode == "estimated" and beta_ref is None:
        if pgram is None:
            raise ValueError("estimated mode needs a fitted beta_ref or a periodogram")
        fit = whittle_fit(spec, pgram)
        if not fit.converged:
            raise RuntimeError("Whittle fit did not converge; cannot calibrate")
        beta_ref = fit.beta_hat
    if beta_ref is None:
        raise ValueError("theoretical mode needs the true beta")

    stats = []
    dropped = 0
    for i in range(reps):
        series = simulate_arfima(spec, beta_ref, family, T, child_seed(seed, i))
        sol = el_stat(spec, beta_ref, periodogram(series))
        if sol.status == CONVERGED:
            stats.append(sol.stat)
        else:
            dropped += 1
    if not stats:
        raise RuntimeError("every bootstrap replicate was infeasible")
    b = spec.k / float(np.mean(stats))
    return BartlettFactor(b=b, mode=mode, reps=reps, dropped=dropped,
                          unreliable=dropped > 0.2 * reps)
