import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arfima_ael.spectral import Periodogram, fourier_grid, periodogram
from oracles import periodogram_direct


def test_fourier_grid_odd_T():
    freqs = fourier_grid(101)
    assert freqs.size == 50
    assert freqs[0] == pytest.approx(2 * np.pi / 101)
    assert freqs[-1] < np.pi


def test_fourier_grid_tiny():
    np.testing.assert_allclose(fourier_grid(5), [2 * np.pi / 5, 4 * np.pi / 5])


def test_fourier_grid_even_T_floor_rule():
    freqs = fourier_grid(100)
    assert freqs.size == 49
    assert freqs[-1] == pytest.approx(0.98 * np.pi)


def test_fourier_grid_rejects_short():
    with pytest.raises(ValueError):
        fourier_grid(4)


def test_constant_series_all_zero():
    pg = periodogram(np.full(7, 3.25))
    np.testing.assert_array_equal(pg.ords, np.zeros(3))


def test_pure_cosine_concentrates_at_matching_frequency():
    T = 21
    t = np.arange(1, T + 1)
    z = np.cos(2 * np.pi * 3 * t / 21)
    pg = periodogram(z)
    _, direct = periodogram_direct(z)
    np.testing.assert_allclose(pg.ords, direct, rtol=0, atol=1e-12 * direct.max())
    peak = pg.ords[2]  # j = 3
    assert peak == pytest.approx(T / (8 * np.pi), rel=1e-10)
    others = np.delete(pg.ords, 2)
    assert np.all(others < 1e-10 * peak)


def test_fast_path_matches_direct_sum_50_series():
    rng = np.random.default_rng(7)
    for _ in range(50):
        T = int(rng.integers(5, 402))
        z = rng.normal(size=T) * rng.uniform(0.1, 10)
        pg = periodogram(z)
        _, direct = periodogram_direct(z)
        scale = max(direct.max(), 1e-300)
        assert np.max(np.abs(pg.ords - direct)) / scale < 1e-10


def test_parseval_identity_gaussian_series():
    rng = np.random.default_rng(11)
    z = rng.normal(size=101)
    pg = periodogram(z)
    lhs = 4 * np.pi / 101 * pg.ords.sum()
    rhs = np.mean((z - z.mean()) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(
    z=arrays(
        np.float64,
        st.integers(5, 201).filter(lambda T: T % 2 == 1),
        elements=st.floats(-1e6, 1e6, allow_nan=False),
    )
)
def test_parseval_identity_property_odd_T(z):
    pg = periodogram(z)
    lhs = 4 * np.pi / z.size * pg.ords.sum()
    rhs = np.mean((z - z.mean()) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    z=arrays(np.float64, 31, elements=st.floats(-100, 100, allow_nan=False)),
    c=st.floats(-1e5, 1e5, allow_nan=False),
)
def test_shift_invariance(z, c):
    base = periodogram(z)
    shifted = periodogram(z + c)
    np.testing.assert_allclose(shifted.ords, base.ords, rtol=0, atol=1e-8 * (1 + base.ords.max()))


def test_ordinates_nonnegative_and_freqs_increasing():
    rng = np.random.default_rng(3)
    pg = periodogram(rng.standard_t(5, size=200))
    assert np.all(pg.ords >= 0)
    assert np.all(np.diff(pg.freqs) > 0)
    assert pg.freqs[0] > 0 and pg.freqs[-1] < np.pi


def test_csv_export(tmp_path):
    pg = periodogram(np.arange(9, dtype=float) ** 1.5)
    out = tmp_path / "pgram.csv"
    pg.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "omega,I"
    assert len(lines) == pg.n + 1
