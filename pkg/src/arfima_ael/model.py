"""ARFIMA(p,d,q) parameterization, validity constraints, spectral density and its log-gradient.

The process is Phi(B) (1-B)^d Z_t = Theta(B) a_t with
Phi(z) = 1 - phi_1 z - ... - phi_p z^p and Theta(z) = 1 + theta_1 z + ... + theta_q z^q.
The parameter vector is laid out as beta = (phi_1..phi_p, theta_1..theta_q, d, sigma2)
everywhere in this package; k = p + q + 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Roots of the AR/MA polynomials with modulus <= 1 + ROOT_TOL are rejected;
# numerical root finders jitter near the unit circle.
ROOT_TOL = 1e-6


class DimensionMismatchError(ValueError):
    """phi/theta lengths do not match the declared (p, q) orders."""


class InvalidParameterError(ValueError):
    """Parameter vector violates the model's validity constraints."""


@dataclass(frozen=True)
class ModelSpec:
    """Model orders: p AR coefficients and q MA coefficients."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0:
            raise ValueError(f"orders must be non-negative, got p={self.p}, q={self.q}")

    @property
    def k(self) -> int:
        """Degrees of freedom of the parameter vector (phi, theta, d, sigma2)."""
        return self.p + self.q + 2

    def param_names(self) -> list[str]:
        return (
            [f"phi{i + 1}" for i in range(self.p)]
            + [f"theta{j + 1}" for j in range(self.q)]
            + ["d", "sigma2"]
        )


@dataclass(frozen=True)
class ParamVector:
    """Model parameters (phi, theta, d, sigma2); immutable after construction."""

    phi: np.ndarray
    theta: np.ndarray
    d: float
    sigma2: float

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float).reshape(-1).copy()
        theta = np.asarray(self.theta, dtype=float).reshape(-1).copy()
        phi.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.phi, self.theta, [self.d, self.sigma2]])

    @classmethod
    def from_array(cls, arr: np.ndarray, spec: ModelSpec) -> "ParamVector":
        arr = np.asarray(arr, dtype=float).reshape(-1)
        if arr.size != spec.k:
            raise DimensionMismatchError(
                f"expected {spec.k} parameters for (p={spec.p}, q={spec.q}), got {arr.size}"
            )
        return cls(
            phi=arr[: spec.p],
            theta=arr[spec.p : spec.p + spec.q],
            d=arr[spec.p + spec.q],
            sigma2=arr[spec.p + spec.q + 1],
        )


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    violations: tuple[str, ...] = field(default_factory=tuple)


def _poly_roots_ar(phi: np.ndarray) -> np.ndarray:
    """Roots of Phi(z) = 1 - phi_1 z - ... - phi_p z^p."""
    if phi.size == 0:
        return np.empty(0, dtype=complex)
    # np.roots wants highest-degree coefficient first and strips leading zeros.
    return np.roots(np.concatenate([-phi[::-1], [1.0]]))


def _poly_roots_ma(theta: np.ndarray) -> np.ndarray:
    """Roots of Theta(z) = 1 + theta_1 z + ... + theta_q z^q."""
    if theta.size == 0:
        return np.empty(0, dtype=complex)
    return np.roots(np.concatenate([theta[::-1], [1.0]]))


def validate(spec: ModelSpec, beta: ParamVector) -> ValidityReport:
    """Check all parameter-validity constraints; names each violated one.

    Dimension mismatches between beta and spec are structural errors and raise
    DimensionMismatchError rather than appearing in the report.
    """
    if beta.phi.size != spec.p or beta.theta.size != spec.q:
        raise DimensionMismatchError(
            f"beta has {beta.phi.size} AR / {beta.theta.size} MA coefficients, "
            f"spec declares (p={spec.p}, q={spec.q})"
        )

    violations: list[str] = []
    if not (0.0 < beta.d < 0.5):
        violations.append(f"d must lie in (0, 0.5), got {beta.d}")
    if not beta.sigma2 > 0.0:
        violations.append(f"sigma2 must be positive, got {beta.sigma2}")
    if not np.all(np.isfinite(beta.to_array())):
        violations.append("parameters must be finite")
        return ValidityReport(False, tuple(violations))

    ar_roots = _poly_roots_ar(beta.phi)
    ma_roots = _poly_roots_ma(beta.theta)
    if ar_roots.size and np.min(np.abs(ar_roots)) <= 1.0 + ROOT_TOL:
        worst = np.min(np.abs(ar_roots))
        if abs(worst - 1.0) <= ROOT_TOL:
            violations.append("AR root on unit circle")
        else:
            violations.append(f"AR root inside/near unit circle (|root|={worst:.6g})")
    if ma_roots.size and np.min(np.abs(ma_roots)) <= 1.0 + ROOT_TOL:
        worst = np.min(np.abs(ma_roots))
        if abs(worst - 1.0) <= ROOT_TOL:
            violations.append("MA root on unit circle")
        else:
            violations.append(f"MA root inside/near unit circle (|root|={worst:.6g})")
    if ar_roots.size and ma_roots.size:
        dist = np.abs(ar_roots[:, None] - ma_roots[None, :])
        if np.min(dist) <= ROOT_TOL:
            violations.append("AR and MA polynomials share a common root")

    return ValidityReport(not violations, tuple(violations))


def require_valid(spec: ModelSpec, beta: ParamVector) -> None:
    """Raise InvalidParameterError when beta is not a valid parameter vector."""
    report = validate(spec, beta)
    if not report.ok:
        raise InvalidParameterError("; ".join(report.violations))


def _check_omega(omega: np.ndarray) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0) or np.any(omega > np.pi + 1e-12):
        raise ValueError("frequencies must lie in (0, pi]; the spectrum has a pole at 0")
    return omega


def _transfer_sq(coeffs: np.ndarray, sign: float, omega: np.ndarray) -> np.ndarray:
    """|1 + sign * sum_r c_r e^{-i r omega}|^2 evaluated vectorized over omega."""
    z = np.ones_like(omega, dtype=complex)
    for r, c in enumerate(coeffs, start=1):
        z += sign * c * np.exp(-1j * r * omega)
    return np.abs(z) ** 2


def spectral_density(spec: ModelSpec, beta: ParamVector, omega) -> np.ndarray | float:
    """ARFIMA spectral density g(omega; beta) for omega in (0, pi].

    g = sigma2/(2 pi) * |Theta(e^{-i omega})|^2 / |Phi(e^{-i omega})|^2
        * (2 sin(omega/2))^(-2d)
    """
    require_valid(spec, beta)
    omega_arr = _check_omega(omega)
    out = _spectral_values(beta, omega_arr)
    return float(out) if np.isscalar(omega) or np.ndim(omega) == 0 else out


def _spectral_values(beta: ParamVector, omega: np.ndarray) -> np.ndarray:
    frac = (2.0 * np.sin(omega / 2.0)) ** (-2.0 * beta.d)
    num = _transfer_sq(beta.theta, +1.0, omega)
    den = _transfer_sq(beta.phi, -1.0, omega)
    return beta.sigma2 / TWO_PI * num / den * frac


def log_spectral_gradient(spec: ModelSpec, beta: ParamVector, omega) -> np.ndarray:
    """Gradient of ln g(omega; beta) w.r.t. beta, ordered (phi, theta, d, sigma2).

    Returns shape (k,) for scalar omega and (len(omega), k) for array omega.
    The d component is -2 ln(2 sin(omega/2)); the sigma2 component is 1/sigma2.
    """
    require_valid(spec, beta)
    omega_arr = np.atleast_1d(_check_omega(omega))
    grad = _log_gradient_values(spec, beta, omega_arr)
    return grad[0] if np.isscalar(omega) or np.ndim(omega) == 0 else grad


def _log_gradient_values(spec: ModelSpec, beta: ParamVector, omega: np.ndarray) -> np.ndarray:
    n = omega.shape[0]
    grad = np.empty((n, spec.k), dtype=float)

    if spec.p:
        phi_z = np.ones_like(omega, dtype=complex)
        for r, c in enumerate(beta.phi, start=1):
            phi_z -= c * np.exp(-1j * r * omega)
        den = np.abs(phi_z) ** 2
        for r in range(1, spec.p + 1):
            # d/dphi_r [-ln|Phi|^2] = 2 Re(e^{-i r w} conj(Phi)) / |Phi|^2
            grad[:, r - 1] = 2.0 * np.real(np.exp(-1j * r * omega) * np.conj(phi_z)) / den
    if spec.q:
        theta_z = np.ones_like(omega, dtype=complex)
        for s, c in enumerate(beta.theta, start=1):
            theta_z += c * np.exp(-1j * s * omega)
        num = np.abs(theta_z) ** 2
        for s in range(1, spec.q + 1):
            grad[:, spec.p + s - 1] = (
                2.0 * np.real(np.exp(-1j * s * omega) * np.conj(theta_z)) / num
            )

    grad[:, spec.p + spec.q] = -2.0 * np.log(2.0 * np.sin(omega / 2.0))
    grad[:, spec.p + spec.q + 1] = 1.0 / beta.sigma2
    return grad
