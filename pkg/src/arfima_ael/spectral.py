"""Fourier frequencies and mean-corrected periodogram ordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arfima_ael.model import TWO_PI


@dataclass(frozen=True)
class Periodogram:
    """Ordinates I(w_j) at Fourier frequencies w_j = 2 pi j / T, j = 1..n."""

    freqs: np.ndarray
    ords: np.ndarray
    T: int
    n: int

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=float)
        ords = np.asarray(self.ords, dtype=float)
        freqs.setflags(write=False)
        ords.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "ords", ords)

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.freqs, self.ords]),
                   delimiter=",", header="omega,I", comments="")


def fourier_grid(T: int) -> np.ndarray:
    """Frequencies 2 pi j / T for j = 1..n with n = floor((T-1)/2)."""
    if T < 5:
        raise ValueError(f"series length must be at least 5, got {T}")
    n = (T - 1) // 2
    return TWO_PI * np.arange(1, n + 1) / T


def periodogram(values) -> Periodogram:
    """Mean-corrected periodogram, I(w_j) = |sum_t (z_t - zbar) e^{-i w_j t}|^2 / (2 pi T).

    Computed through one FFT; the index-origin phase drops out in the modulus,
    so this equals the direct t = 1..T sine/cosine quadratic form.
    Accepts a plain array or anything with a ``values`` attribute.
    """
    z = np.asarray(getattr(values, "values", values), dtype=float)
    T = z.size
    if T < 5:
        raise ValueError(f"series length must be at least 5, got {T}")
    n = (T - 1) // 2
    x = z - z.mean()
    coef = np.fft.rfft(x)[1 : n + 1]
    ords = (coef.real**2 + coef.imag**2) / (TWO_PI * T)
    return Periodogram(freqs=fourier_grid(T), ords=ords, T=T, n=n)
