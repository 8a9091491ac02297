import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arfima_ael.model import (
    DimensionMismatchError,
    InvalidParameterError,
    ModelSpec,
    ParamVector,
    log_spectral_gradient,
    spectral_density,
    validate,
)
from oracles import fd_log_gradient, spectral_density_acvf_oracle


def test_k_counts_all_coordinates():
    assert ModelSpec(0, 0).k == 2
    assert ModelSpec(1, 0).k == 3
    assert ModelSpec(2, 3).k == 7


def test_validate_pure_fractional_ok():
    report = validate(ModelSpec(0, 0), ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0))
    assert report.ok and report.violations == ()


def test_validate_ar_root_on_unit_circle():
    report = validate(ModelSpec(1, 0), ParamVector(phi=[1.0], theta=[], d=0.3, sigma2=1.0))
    assert not report.ok
    assert any("AR root" in v for v in report.violations)


def test_validate_paper_ar1_point_ok():
    report = validate(ModelSpec(1, 0), ParamVector(phi=[0.2], theta=[], d=0.3, sigma2=1.0))
    assert report.ok


def test_validate_names_every_violation():
    report = validate(
        ModelSpec(1, 0), ParamVector(phi=[1.5], theta=[], d=0.7, sigma2=-1.0)
    )
    assert not report.ok
    assert len(report.violations) == 3


def test_validate_common_root_rejected():
    # Phi(z) = 1 - 0.5 z and Theta(z) = 1 - 0.5 z share root z = 2.
    report = validate(
        ModelSpec(1, 1), ParamVector(phi=[0.5], theta=[-0.5], d=0.3, sigma2=1.0)
    )
    assert not report.ok
    assert any("common root" in v for v in report.violations)


def test_validate_dimension_mismatch_is_structural():
    with pytest.raises(DimensionMismatchError):
        validate(ModelSpec(2, 0), ParamVector(phi=[0.2], theta=[], d=0.3, sigma2=1.0))


def test_spectral_density_white_noise_flat():
    spec = ModelSpec(0, 0)
    beta = ParamVector(phi=[], theta=[], d=1e-12, sigma2=1.0)
    # d ~ 0 degenerates to the flat white-noise spectrum 1/(2 pi).
    assert spectral_density(spec, beta, np.pi / 2) == pytest.approx(1 / (2 * np.pi), rel=1e-9)


def test_spectral_density_matches_acvf_oracle_at_pi():
    got = spectral_density(ModelSpec(0, 0), ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0), np.pi)
    oracle = spectral_density_acvf_oracle(d=0.3, sigma2=1.0, omega=np.pi)
    assert got == pytest.approx(oracle, rel=1e-6)
    assert got == pytest.approx(0.105005, abs=5e-6)


def test_spectral_density_ar1_transfer_factor():
    got = spectral_density(
        ModelSpec(1, 0), ParamVector(phi=[0.2], theta=[], d=0.3, sigma2=1.0), np.pi
    )
    oracle = spectral_density_acvf_oracle(d=0.3, sigma2=1.0, omega=np.pi)
    assert got == pytest.approx(oracle / abs(1 - 0.2 * np.exp(-1j * np.pi)) ** 2, rel=1e-6)
    assert got == pytest.approx(0.072920, abs=5e-6)


def test_spectral_density_rejects_pole_at_zero():
    spec = ModelSpec(0, 0)
    beta = ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0)
    with pytest.raises(ValueError):
        spectral_density(spec, beta, 0.0)


def test_spectral_density_rejects_invalid_beta():
    with pytest.raises(InvalidParameterError):
        spectral_density(ModelSpec(0, 0), ParamVector(phi=[], theta=[], d=0.6, sigma2=1.0), 1.0)


def test_log_gradient_pure_fractional_at_pi():
    grad = log_spectral_gradient(
        ModelSpec(0, 0), ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0), np.pi
    )
    np.testing.assert_allclose(grad, [-2 * np.log(2), 1.0], rtol=1e-12)


def test_log_gradient_d_component_zero_at_unit_sine():
    omega = 2 * np.arcsin(0.5)  # 2 sin(w/2) = 1
    grad = log_spectral_gradient(
        ModelSpec(0, 0), ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0), omega
    )
    assert grad[0] == pytest.approx(0.0, abs=1e-12)


def _random_valid_draw(rng, spec):
    while True:
        beta = ParamVector(
            phi=rng.uniform(-0.7, 0.7, size=spec.p),
            theta=rng.uniform(-0.7, 0.7, size=spec.q),
            d=rng.uniform(0.05, 0.45),
            sigma2=rng.uniform(0.2, 5.0),
        )
        if validate(spec, beta).ok:
            return beta


def test_log_gradient_matches_finite_differences_100_draws():
    rng = np.random.default_rng(20240811)
    for _ in range(100):
        spec = ModelSpec(int(rng.integers(0, 3)), int(rng.integers(0, 3)))
        beta = _random_valid_draw(rng, spec)
        omega = rng.uniform(0.05, np.pi)
        grad = log_spectral_gradient(spec, beta, omega)

        def log_g(arr):
            b = ParamVector.from_array(arr, spec)
            return np.log(spectral_density(spec, b, omega))

        fd = fd_log_gradient(log_g, beta.to_array(), step=1e-6)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(
    d=st.floats(0.01, 0.49),
    phi=st.floats(-0.9, 0.9),
    omega=st.floats(0.01, np.pi),
)
def test_spectral_density_positive_and_symmetric(d, phi, omega):
    spec = ModelSpec(1, 0)
    beta = ParamVector(phi=[phi], theta=[], d=d, sigma2=1.0)
    g = spectral_density(spec, beta, omega)
    assert np.isfinite(g) and g > 0
    # conjugate symmetry of the closed form: evaluate the mirror frequency
    # directly (2 pi - omega is outside (0, pi], so compare via cos parity).
    from arfima_ael.model import _spectral_values

    mirrored = _spectral_values(beta, np.atleast_1d(2 * np.pi - omega))
    assert g == pytest.approx(float(mirrored[0]), rel=1e-10)


def test_d_to_zero_continuity():
    spec = ModelSpec(0, 0)
    tiny = ParamVector(phi=[], theta=[], d=1e-8, sigma2=1.0)
    for omega in np.linspace(0.3, np.pi, 7):
        g_tiny = spectral_density(spec, tiny, omega)
        g_zero = 1.0 / (2.0 * np.pi)  # d = 0 closed form (white noise)
        assert abs(g_tiny - g_zero) < 1e-6
