"""Independent reference implementations used as test oracles.

These deliberately avoid the library's own code paths: autocovariance Fourier
sums for the spectral density, O(T^2) direct sums for the periodogram, central
finite differences for gradients, and a grid search for the scalar Lagrange
multiplier.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln


def acvf_fractional_noise(d: float, sigma2: float, nlags: int) -> np.ndarray:
    """Closed-form autocovariances gamma_0..gamma_nlags of ARFIMA(0,d,0).

    gamma_h = sigma2 * Gamma(1-2d) Gamma(h+d) / (Gamma(d) Gamma(1-d) Gamma(h+1-d)),
    computed by the stable ratio recursion gamma_h = gamma_{h-1} (h-1+d)/(h-d).
    """
    g0 = sigma2 * np.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))
    if nlags == 0:
        return np.array([g0])
    h = np.arange(1, nlags + 1)
    return g0 * np.concatenate([[1.0], np.cumprod((h - 1.0 + d) / (h - d))])


def spectral_density_acvf_oracle(d: float, sigma2: float, omega: float, nlags: int = 10**5) -> float:
    """Fractional-noise spectral density via a truncated Fourier sum of the ACF.

    Uses the half-last-term (midpoint) correction, the standard remainder
    killer for the alternating/oscillating tail; at omega = pi the terms
    alternate exactly and the corrected sum is accurate to ~1e-8 relative.
    """
    gam = acvf_fractional_noise(d, sigma2, nlags)
    h = np.arange(1, nlags + 1)
    terms = 2.0 * gam[1:] * np.cos(omega * h)
    s_full = gam[0] + np.sum(terms)
    s_minus = s_full - terms[-1]
    return 0.5 * (s_full + s_minus) / (2.0 * np.pi)


def fd_log_gradient(fun, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function at x."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fun(hi) - fun(lo)) / (2.0 * step)
    return grad


def periodogram_direct(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """O(T^2) sine/cosine quadratic form with mean correction, t = 1..T.

    I(w_j) = (1/(2 pi T)) [ (sum (z_t - zbar) sin(w_j t))^2
                          + (sum (z_t - zbar) cos(w_j t))^2 ],  w_j = 2 pi j / T.
    """
    z = np.asarray(values, dtype=float)
    T = z.size
    n = (T - 1) // 2
    x = z - z.mean()
    t = np.arange(1, T + 1)
    freqs = 2.0 * np.pi * np.arange(1, n + 1) / T
    ords = np.empty(n)
    for idx, w in enumerate(freqs):
        s = np.sum(x * np.sin(w * t))
        c = np.sum(x * np.cos(w * t))
        ords[idx] = (s * s + c * c) / (2.0 * np.pi * T)
    return freqs, ords


def lagrange_grid_oracle(rows: np.ndarray, lo: float, hi: float, npts: int = 2_000_001) -> float:
    """Grid search for the scalar-row Lagrange multiplier zeroing sum psi/(1+xi psi)."""
    rows = np.asarray(rows, dtype=float).reshape(-1)
    xi = np.linspace(lo, hi, npts)
    denom = 1.0 + np.outer(xi, rows)
    score = np.where(np.all(denom > 0, axis=1), np.abs((rows / denom).sum(axis=1)), np.inf)
    return float(xi[np.argmin(score)])
