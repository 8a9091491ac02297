"""ARFIMA sample-path generation under five innovation distributions.

Gaussian paths use exact circulant embedding (Davies-Harte) of the fractional
core's autocovariance, then an ARMA(phi, theta) filter. Non-Gaussian paths use
a truncated MA(inf) representation of (1-B)^{-d} so the innovation law is
preserved; circulant embedding would Gaussianize it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve, lfilter
from scipy.special import gammaln

from arfima_ael.model import ModelSpec, ParamVector, require_valid

log = logging.getLogger(__name__)

MA_TRUNCATION = 10_000
MA_BURN_IN = 1_000


@dataclass(frozen=True)
class InnovationFamily:
    """Mean-zero innovation law; ``variance`` is the raw family variance."""

    tag: str
    variance: float


FAMILIES = {
    "gaussian": InnovationFamily("gaussian", 1.0),
    "t5": InnovationFamily("t5", 5.0 / 3.0),
    "t10": InnovationFamily("t10", 10.0 / 8.0),
    "exp1": InnovationFamily("exp1", 1.0),
    "chisq5": InnovationFamily("chisq5", 10.0),
}


def innovation_family(tag: str) -> InnovationFamily:
    try:
        return FAMILIES[tag]
    except KeyError:
        raise ValueError(f"unknown innovation family {tag!r}; choose from {sorted(FAMILIES)}")


@dataclass(frozen=True)
class TimeSeries:
    """A realization plus the seed and generator metadata that produced it."""

    values: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return self.values.size

    def to_csv(self, path) -> None:
        t = np.arange(1, self.T + 1)
        np.savetxt(path, np.column_stack([t, self.values]),
                   delimiter=",", header="t,value", comments="", fmt=["%d", "%.17g"])


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Deterministic child stream: SeedSequence entropy = (seed, counter path).

    All randomness in the package flows through this scheme, so concurrent
    replicates get independent, reproducible streams.
    """
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def child_seed(seed: int, *path: int) -> int:
    """Stable 63-bit seed token for the (seed, counter path) child stream."""
    return int(derive_rng(seed, *path).integers(0, 2**63 - 1))


def _raw_draws(family: InnovationFamily, count: int, rng: np.random.Generator) -> np.ndarray:
    if family.tag == "gaussian":
        return rng.standard_normal(count)
    if family.tag == "t5":
        return rng.standard_t(5, size=count)
    if family.tag == "t10":
        return rng.standard_t(10, size=count)
    if family.tag == "exp1":
        return rng.exponential(1.0, size=count) - 1.0
    if family.tag == "chisq5":
        return rng.chisquare(5, size=count) - 5.0
    raise ValueError(f"unknown innovation family {family.tag!r}")


def draw_innovations(family: InnovationFamily | str, count: int, seed: int) -> np.ndarray:
    """i.i.d. centered draws from the family; deterministic given seed."""
    if isinstance(family, str):
        family = innovation_family(family)
    if count < 1:
        raise ValueError("count must be at least 1")
    return _raw_draws(family, count, derive_rng(seed))


def fractional_acvf(d: float, sigma2: float, nlags: int) -> np.ndarray:
    """Autocovariances gamma_0..gamma_nlags of the fractional core (1-B)^{-d} a_t."""
    g0 = sigma2 * np.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))
    if nlags == 0:
        return np.array([g0])
    h = np.arange(1, nlags + 1)
    return g0 * np.concatenate([[1.0], np.cumprod((h - 1.0 + d) / (h - d))])


def fractional_ma_weights(d: float, count: int) -> np.ndarray:
    """First ``count`` coefficients of (1-B)^{-d}: psi_k = psi_{k-1} (d+k-1)/k."""
    k = np.arange(1, count)
    return np.concatenate([[1.0], np.cumprod((d + k - 1.0) / k)])


class _EmbeddingFailed(Exception):
    pass


def _davies_harte(gam: np.ndarray, N: int, rng: np.random.Generator) -> np.ndarray:
    """Exact stationary Gaussian vector of length N with autocovariance gam[0..N]."""
    c = np.concatenate([gam[:N], gam[N:N + 1], gam[N - 1:0:-1]])
    eig = np.fft.fft(c).real
    if eig.min() < -1e-8 * max(eig.max(), 1.0):
        raise _EmbeddingFailed(f"negative circulant eigenvalue {eig.min():.3e}")
    eig = np.clip(eig, 0.0, None)
    M = 2 * N
    z = np.empty(M, dtype=complex)
    ends = rng.standard_normal(2)
    v = rng.standard_normal((N - 1, 2))
    z[0] = ends[0]
    z[N] = ends[1]
    z[1:N] = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
    z[N + 1:] = np.conj(z[1:N][::-1])
    return np.sqrt(M) * np.fft.ifft(np.sqrt(eig) * z).real[:N]


def _ma_core(d: float, sigma2: float, family: InnovationFamily, N: int,
             rng: np.random.Generator) -> np.ndarray:
    """Fractional core via truncated MA(inf), innovations scaled to variance sigma2."""
    psi = fractional_ma_weights(d, MA_TRUNCATION)
    scale = np.sqrt(sigma2 / family.variance)
    a = scale * _raw_draws(family, N + MA_TRUNCATION - 1, rng)
    return fftconvolve(a, psi, mode="valid")


def simulate_arfima(spec: ModelSpec, beta: ParamVector, family: InnovationFamily | str,
                    T: int, seed: int) -> TimeSeries:
    """Length-T stationary ARFIMA realization; even T is mapped to T-1.

    The fractional core is exact circulant embedding for Gaussian innovations
    (falling back to truncated MA(inf) if the embedding has a negative
    eigenvalue) and always truncated MA(inf) for non-Gaussian families. The
    core then drives the ARMA recursion, with the initial burn-in discarded.
    """
    if isinstance(family, str):
        family = innovation_family(family)
    require_valid(spec, beta)
    if T < 5:
        raise ValueError(f"series length must be at least 5, got {T}")
    requested_T = T
    if T % 2 == 0:
        T -= 1
        log.info("even series length %d mapped to %d so n = (T-1)/2 is exact", requested_T, T)

    rng = derive_rng(seed)
    meta = {
        "p": spec.p, "q": spec.q,
        "phi": beta.phi.tolist(), "theta": beta.theta.tolist(),
        "d": beta.d, "sigma2": beta.sigma2,
        "family": family.tag, "requested_T": requested_T, "T": T,
        "fallback": False,
    }

    if family.tag == "gaussian":
        burn = max(500, 10 * (spec.p + spec.q))
        N = T + burn
        try:
            core = _davies_harte(fractional_acvf(beta.d, beta.sigma2, N), N, rng)
            meta["method"] = "davies-harte"
        except _EmbeddingFailed as err:
            log.warning("circulant embedding failed (%s); using truncated MA path", err)
            burn = MA_BURN_IN
            N = T + burn
            core = _ma_core(beta.d, beta.sigma2, family, N, rng)
            meta["method"] = "truncated-ma"
            meta["fallback"] = True
    else:
        burn = MA_BURN_IN
        N = T + burn
        core = _ma_core(beta.d, beta.sigma2, family, N, rng)
        meta["method"] = "truncated-ma"

    # Z_t - sum phi_i Z_{t-i} = X_t + sum theta_j X_{t-j}
    filtered = lfilter(np.concatenate([[1.0], beta.theta]),
                       np.concatenate([[1.0], -beta.phi]), core)
    return TimeSeries(values=filtered[burn:burn + T], seed=seed, meta=meta)
