"""Whittle likelihood, estimating functions, point estimation, sandwich covariance.

ln L(beta) = -sum_j ln g_j(beta) - sum_j I(w_j)/g_j(beta) over the Fourier
frequencies, with per-frequency estimating function
psi_j = (I(w_j)/g_j - 1) d ln g_j / d beta. The score of ln L equals
sum_j psi_j, which is what the fitter drives to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from arfima_ael.model import (
    ModelSpec,
    ParamVector,
    _log_gradient_values,
    _spectral_values,
    require_valid,
    validate,
)
from arfima_ael.spectral import Periodogram

SCORE_TOL_PER_ORDINATE = 1e-6  # tol_score = 1e-6 * n
FD_STEP = 1e-5
_PENALTY = 1e15


@dataclass(frozen=True)
class PsiMatrix:
    """n x k matrix of estimating functions evaluated at one parameter point."""

    rows: np.ndarray
    beta_at: ParamVector

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def k(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class ParameterBox:
    """Compact axis-aligned search region, ordered like the parameter vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or np.any(lower >= upper):
            raise ValueError("box must satisfy lower < upper componentwise")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def default(cls, spec: ModelSpec) -> "ParameterBox":
        lo = np.concatenate([np.full(spec.p + spec.q, -0.99), [0.01, 1e-4]])
        hi = np.concatenate([np.full(spec.p + spec.q, 0.99), [0.49, 1e4]])
        return cls(lo, hi)


@dataclass(frozen=True)
class WhittleFit:
    beta_hat: ParamVector
    loglik: float
    converged: bool
    iterations: int
    cov_hat: Optional[np.ndarray]
    score_norm: float
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "beta_hat": {
                "phi": self.beta_hat.phi.tolist(),
                "theta": self.beta_hat.theta.tolist(),
                "d": self.beta_hat.d,
                "sigma2": self.beta_hat.sigma2,
            },
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "cov_hat": None if self.cov_hat is None else self.cov_hat.tolist(),
            "score_norm": self.score_norm,
            "message": self.message,
        }


def whittle_loglik(spec: ModelSpec, beta: ParamVector, pgram: Periodogram) -> float:
    """-sum ln g_j - sum I_j/g_j; raises InvalidParameterError on invalid beta."""
    require_valid(spec, beta)
    g = _spectral_values(beta, pgram.freqs)
    return float(-np.sum(np.log(g)) - np.sum(pgram.ords / g))


def psi_matrix(spec: ModelSpec, beta: ParamVector, pgram: Periodogram) -> PsiMatrix:
    """Row j = (I(w_j)/g_j(beta) - 1) * d ln g_j / d beta."""
    require_valid(spec, beta)
    g = _spectral_values(beta, pgram.freqs)
    grads = _log_gradient_values(spec, beta, pgram.freqs)
    rows = (pgram.ords / g - 1.0)[:, None] * grads
    return PsiMatrix(rows=rows, beta_at=beta)


def whittle_score(spec: ModelSpec, beta: ParamVector, pgram: Periodogram) -> np.ndarray:
    """Gradient of whittle_loglik, identically sum_j psi_j."""
    return psi_matrix(spec, beta, pgram).rows.sum(axis=0)


def _loglik_and_score_unchecked(spec, x, pgram):
    beta = ParamVector.from_array(x, spec)
    if not validate(spec, beta).ok:
        return None
    g = _spectral_values(beta, pgram.freqs)
    grads = _log_gradient_values(spec, beta, pgram.freqs)
    loglik = -np.sum(np.log(g)) - np.sum(pgram.ords / g)
    score = ((pgram.ords / g - 1.0)[:, None] * grads).sum(axis=0)
    return loglik, score


def _profile_sigma2(spec: ModelSpec, shape: np.ndarray, pgram: Periodogram,
                    box: ParameterBox) -> float:
    """Closed-form maximizer of the likelihood in sigma2 given shape parameters."""
    beta_unit = ParamVector.from_array(np.concatenate([shape, [1.0]]), spec)
    if not validate(spec, beta_unit).ok:
        return float(np.clip(1.0, box.lower[-1], box.upper[-1]))
    g_unit = _spectral_values(beta_unit, pgram.freqs)
    s2 = float(np.mean(pgram.ords / g_unit))
    return float(np.clip(s2, box.lower[-1] * 1.001, box.upper[-1] * 0.999))


def _start_points(spec: ModelSpec, pgram: Periodogram, box: ParameterBox,
                  count: int = 5) -> list[np.ndarray]:
    """Quasi-random interior shape points with profiled sigma2 starts."""
    halton = qmc.Halton(d=spec.k - 1, scramble=False)
    unit = halton.random(count + 2)[2:]  # skip the degenerate leading points
    shape_lo = box.lower[:-1] + 0.05 * (box.upper[:-1] - box.lower[:-1])
    shape_hi = box.upper[:-1] - 0.05 * (box.upper[:-1] - box.lower[:-1])
    points = []
    for row in unit:
        shape = shape_lo + row * (shape_hi - shape_lo)
        x = np.concatenate([shape, [_profile_sigma2(spec, shape, pgram, box)]])
        if validate(spec, ParamVector.from_array(x, spec)).ok:
            points.append(x)
    return points


def _newton_polish(spec, x, pgram, box, tol):
    """Damped Newton steps on the score to sharpen an L-BFGS-B solution."""
    for _ in range(30):
        res = _loglik_and_score_unchecked(spec, x, pgram)
        if res is None:
            return x
        _, score = res
        if np.linalg.norm(score) <= 0.01 * tol:
            return x
        jac = _score_jacobian(spec, x, pgram, box)
        try:
            step = np.linalg.solve(jac, -score)
        except np.linalg.LinAlgError:
            return x
        moved = False
        for damp in (1.0, 0.5, 0.25, 0.1):
            cand = np.clip(x + damp * step, box.lower, box.upper)
            cand_res = _loglik_and_score_unchecked(spec, cand, pgram)
            if cand_res is not None and np.linalg.norm(cand_res[1]) < np.linalg.norm(score):
                x = cand
                moved = True
                break
        if not moved:
            return x
    return x


def _score_jacobian(spec: ModelSpec, x: np.ndarray, pgram: Periodogram,
                    box: ParameterBox, step: float = FD_STEP) -> np.ndarray:
    """Central finite differences of the score; one-sided at validity edges."""
    k = x.size
    jac = np.empty((k, k))
    base = _loglik_and_score_unchecked(spec, x, pgram)
    for l in range(k):
        hi = x.copy()
        lo = x.copy()
        hi[l] += step
        lo[l] -= step
        r_hi = _loglik_and_score_unchecked(spec, hi, pgram)
        r_lo = _loglik_and_score_unchecked(spec, lo, pgram)
        if r_hi is not None and r_lo is not None:
            jac[:, l] = (r_hi[1] - r_lo[1]) / (2.0 * step)
        elif r_hi is not None and base is not None:
            jac[:, l] = (r_hi[1] - base[1]) / step
        elif r_lo is not None and base is not None:
            jac[:, l] = (base[1] - r_lo[1]) / step
        else:
            jac[:, l] = np.nan
    return jac


def sandwich_covariance(spec: ModelSpec, beta: ParamVector, pgram: Periodogram,
                        box: Optional[ParameterBox] = None) -> Optional[np.ndarray]:
    """A^{-1} S (A')^{-1} with A = (1/n) sum dpsi_j/dbeta' and S = (1/n) sum psi psi'."""
    if box is None:
        box = ParameterBox.default(spec)
    rows = psi_matrix(spec, beta, pgram).rows
    n = rows.shape[0]
    a_hat = _score_jacobian(spec, beta.to_array(), pgram, box) / n
    sigma_hat = rows.T @ rows / n
    try:
        a_inv = np.linalg.inv(a_hat)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(a_inv)):
        return None
    return a_inv @ sigma_hat @ a_inv.T


def whittle_fit(spec: ModelSpec, pgram: Periodogram,
                box: Optional[ParameterBox] = None,
                start: Optional[ParamVector] = None,
                max_iter: int = 500) -> WhittleFit:
    """Maximize the Whittle likelihood over the box; multi-start quasi-Newton.

    Convergence requires score norm <= 1e-6 * n. Non-convergence returns the
    best iterate flagged converged=False; a singular derivative matrix leaves
    cov_hat as None.
    """
    if box is None:
        box = ParameterBox.default(spec)
    n = pgram.n
    tol = SCORE_TOL_PER_ORDINATE * n

    candidates: list[np.ndarray] = []
    if start is not None:
        require_valid(spec, start)
        candidates.append(start.to_array())
    candidates.extend(_start_points(spec, pgram, box))
    if not candidates:
        raise ValueError("no valid start point inside the box")

    def objective(x):
        res = _loglik_and_score_unchecked(spec, x, pgram)
        if res is None:
            return _PENALTY, np.zeros_like(x)
        loglik, score = res
        if not np.isfinite(loglik):
            return _PENALTY, np.zeros_like(x)
        return -loglik, -score

    best_x = None
    best_val = np.inf
    total_iters = 0
    bounds = list(zip(box.lower, box.upper))
    for idx, x0 in enumerate(candidates):
        res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-10})
        total_iters += res.nit
        if res.fun < best_val - 1e-12:
            best_val = res.fun
            best_x = res.x

    best_x = _newton_polish(spec, best_x, pgram, box, tol)
    beta_hat = ParamVector.from_array(best_x, spec)
    final = _loglik_and_score_unchecked(spec, best_x, pgram)
    if final is None:
        return WhittleFit(beta_hat, -np.inf, False, total_iters, None, np.inf,
                          "optimizer left the valid region")
    loglik, score = final
    score_norm = float(np.linalg.norm(score))
    converged = score_norm <= tol

    cov = sandwich_covariance(spec, beta_hat, pgram, box) if converged else None
    message = "" if converged else f"score norm {score_norm:.3e} exceeds tol {tol:.3e}"
    if converged and cov is None:
        message = "singular derivative matrix; covariance unavailable"
    return WhittleFit(beta_hat, float(loglik), converged, total_iters, cov,
                      score_norm, message)
