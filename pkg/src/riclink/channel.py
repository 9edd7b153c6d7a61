"""Flat Rician fading with L-branch receive diversity and calibrated AWGN.

Two gain generators share one parameter set:

* ``GaussianLimit``: LOS phasor plus a circular complex Gaussian diffuse term.
* ``FiniteScatterers``: LOS phasor plus ``N`` equal-amplitude scattered
  phasors with i.i.d. uniform phases; tends to the Gaussian limit as N grows.

Both have unit mean power E|h|^2 = 1. ``k_factor = inf`` gives a
deterministic unit gain (pure AWGN).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from riclink.errors import ParameterError

_CHUNK = 1 << 22


class FadingModel(str, enum.Enum):
    GAUSSIAN_LIMIT = "gaussian"
    FINITE_SCATTERERS = "finite"

    @classmethod
    def parse(cls, value) -> "FadingModel":
        if isinstance(value, FadingModel):
            return value
        aliases = {"gaussianlimit": "gaussian", "finitescatterers": "finite"}
        key = str(value).lower().replace("_", "").replace("-", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ParameterError(f"unknown fading model {value!r}") from None


@dataclass(frozen=True)
class RicianParams:
    k_factor: float
    model: FadingModel = FadingModel.GAUSSIAN_LIMIT
    n_scatterers: int = 16
    los_phase: float = 0.0

    def __post_init__(self) -> None:
        k = float(self.k_factor)
        if math.isnan(k) or k < 0:
            raise ParameterError(f"k_factor must be >= 0, got {self.k_factor}")
        object.__setattr__(self, "k_factor", k)
        object.__setattr__(self, "model", FadingModel.parse(self.model))
        if self.model is FadingModel.FINITE_SCATTERERS and int(self.n_scatterers) < 1:
            raise ParameterError(f"n_scatterers must be >= 1, got {self.n_scatterers}")

    @property
    def los_amplitude(self) -> float:
        """C_los = sqrt(K/(K+1))."""
        if math.isinf(self.k_factor):
            return 1.0
        return math.sqrt(self.k_factor / (self.k_factor + 1.0))

    @property
    def diffuse_power(self) -> float:
        """Mean power of the scattered part, 1/(K+1)."""
        if math.isinf(self.k_factor):
            return 0.0
        return 1.0 / (self.k_factor + 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    ebn0_db: float
    m: int
    es: float = 1.0

    @property
    def n0(self) -> float:
        return ebn0_to_n0(self.ebn0_db, self.m, self.es)


@dataclass(frozen=True)
class BranchObservation:
    gains: np.ndarray
    received: np.ndarray

    def __post_init__(self) -> None:
        if self.gains.shape != self.received.shape or self.gains.size < 1:
            raise ParameterError("gains and received must both hold L >= 1 samples")

    @property
    def diversity(self) -> int:
        return int(self.gains.size)


def ebn0_to_n0(ebn0_db: float, m: int, es: float = 1.0) -> float:
    """Noise spectral density giving the requested Eb/N0 for M-ary symbols of energy ``es``."""
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    if es <= 0:
        raise ParameterError(f"es must be > 0, got {es}")
    return es / (math.log2(m) * 10.0 ** (ebn0_db / 10.0))


def _shape(size) -> tuple[int, ...]:
    if size is None:
        return ()
    return (size,) if isinstance(size, (int, np.integer)) else tuple(size)


def complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian with E|z|^2 = variance."""
    scale = math.sqrt(variance / 2.0)
    shape = _shape(size)
    return scale * rng.standard_normal(shape) + 1j * (scale * rng.standard_normal(shape))


def sample_rician_gaussian(p: RicianParams, rng: np.random.Generator, size=None):
    if p.model is not FadingModel.GAUSSIAN_LIMIT:
        raise ParameterError("sample_rician_gaussian needs model=GaussianLimit")
    los = p.los_amplitude * complex(math.cos(p.los_phase), math.sin(p.los_phase))
    shape = _shape(size)
    if p.diffuse_power == 0.0:
        h = np.full(shape, los, dtype=np.complex128)
    else:
        h = los + complex_normal(rng, shape, p.diffuse_power)
    return complex(h) if size is None else h


def sample_rician_finite_n(p: RicianParams, rng: np.random.Generator, size=None):
    if p.model is not FadingModel.FINITE_SCATTERERS:
        raise ParameterError("sample_rician_finite_n needs model=FiniteScatterers")
    n = int(p.n_scatterers)
    los = p.los_amplitude * complex(math.cos(p.los_phase), math.sin(p.los_phase))
    rho = math.sqrt(p.diffuse_power / n)
    shape = _shape(size)
    total = int(np.prod(shape, dtype=np.int64))
    h = np.empty(total, dtype=np.complex128)
    step = max(1, _CHUNK // n)
    for start in range(0, total, step):
        stop = min(total, start + step)
        phi = rng.uniform(0.0, 2 * np.pi, size=(stop - start, n))
        h[start:stop] = los + rho * np.exp(1j * phi).sum(axis=1)
    return complex(h[0]) if size is None else h.reshape(shape)


def sample_gains(p: RicianParams, rng: np.random.Generator, size=None):
    if p.model is FadingModel.GAUSSIAN_LIMIT:
        return sample_rician_gaussian(p, rng, size)
    return sample_rician_finite_n(p, rng, size)


def add_noise(x: np.ndarray, n0: float, rng: np.random.Generator) -> np.ndarray:
    return x + complex_normal(rng, np.shape(x), n0)


def transmit(
    symbol: complex,
    diversity: int,
    p: RicianParams,
    noise: NoiseSpec,
    rng: np.random.Generator,
) -> BranchObservation:
    """Send one symbol over ``diversity`` independently fading branches."""
    if diversity < 1:
        raise ParameterError(f"diversity order must be >= 1, got {diversity}")
    gains = np.asarray(sample_gains(p, rng, diversity), dtype=np.complex128)
    received = add_noise(gains * symbol, noise.n0, rng)
    return BranchObservation(gains, received)


def transmit_block(
    symbols: np.ndarray,
    diversity: int,
    p: RicianParams,
    n0: float,
    gain_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`transmit`: returns ``(gains, received)``, each (n, L)."""
    if diversity < 1:
        raise ParameterError(f"diversity order must be >= 1, got {diversity}")
    shape = (len(symbols), diversity)
    gains = sample_gains(p, gain_rng, shape)
    received = gains * np.asarray(symbols)[:, None] + complex_normal(noise_rng, shape, n0)
    return gains, received


def estimate_k_factor(h: np.ndarray) -> float:
    """Method-of-moments K from the second and fourth moments of |h|."""
    p = np.abs(h) ** 2
    m2 = p.mean()
    m4 = (p * p).mean()
    los_power = math.sqrt(max(2 * m2 * m2 - m4, 0.0))
    return los_power / (m2 - los_power)
