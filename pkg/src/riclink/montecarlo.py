"""Monte Carlo BER engine.

A cell is simulated in blocks of ``batch_bits``. Every block draws from its own
Philox streams keyed by (cell seed, block index, stream id), so the result of a
block does not depend on which worker ran it. Blocks are reduced in index
order and the run stops at the first block boundary where the stopping rule
fires; blocks computed past that point by parallel workers are discarded.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from riclink import kernels
from riclink.channel import RicianParams, ebn0_to_n0, sample_gains, complex_normal
from riclink.errors import ParameterError, RiclinkError, UndefinedEstimateError
from riclink.modem import Constellation, Scheme, build

_STREAM_BITS, _STREAM_GAINS, _STREAM_NOISE = 0, 1, 2


@dataclass(frozen=True)
class StoppingRule:
    min_bit_errors: int = 200
    max_bits: int = 10_000_000
    batch_bits: int = 100_000

    def __post_init__(self) -> None:
        if self.min_bit_errors < 1:
            raise ParameterError("min_bit_errors must be >= 1")
        if not 0 < self.batch_bits <= self.max_bits:
            raise ParameterError("need 0 < batch_bits <= max_bits")


@dataclass(frozen=True)
class SimPoint:
    scheme: Scheme
    m: int
    ebn0_db: float
    diversity: int
    rician: RicianParams
    stop: StoppingRule = field(default_factory=StoppingRule)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if int(self.diversity) < 1:
            raise ParameterError(f"diversity order must be >= 1, got {self.diversity}")
        if not math.isfinite(self.ebn0_db):
            raise ParameterError(f"ebn0_db must be finite, got {self.ebn0_db}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must fit in 64 unsigned bits")
        build(self.scheme, self.m)

    @property
    def constellation(self) -> Constellation:
        return build(self.scheme, self.m)

    def describe(self) -> str:
        return (
            f"{self.m}-{self.scheme.value.upper()} Eb/N0={self.ebn0_db} dB "
            f"L={self.diversity} K={self.rician.k_factor} model={self.rician.model.value}"
        )


@dataclass(frozen=True)
class BerEstimate:
    bits_sent: int
    bit_errors: int
    symbols_sent: int
    symbol_errors: int
    ber: float
    ser: float
    ci95: tuple[float, float]

    @property
    def ber_stderr(self) -> float:
        return math.sqrt(self.ber * (1.0 - self.ber) / self.bits_sent)

    @property
    def ser_stderr(self) -> float:
        return math.sqrt(self.ser * (1.0 - self.ser) / self.symbols_sent)


def ber_of(bit_errors: int, bits_sent: int) -> float:
    """Error bits over transmitted bits."""
    if bits_sent <= 0:
        raise UndefinedEstimateError("no bits sent")
    if not 0 <= bit_errors <= bits_sent:
        raise ParameterError(f"bit_errors={bit_errors} outside [0, {bits_sent}]")
    return bit_errors / bits_sent


def wilson_ci(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise UndefinedEstimateError("Wilson interval needs trials > 0")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = errors / trials
    z2n = z * z / trials
    center = (p + z2n / 2.0) / (1.0 + z2n)
    margin = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    low = 0.0 if errors == 0 else max(0.0, center - margin)
    high = 1.0 if errors == trials else min(1.0, center + margin)
    return min(low, p), max(high, p)


def _block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block, stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class _BlockResult:
    bits: int
    bit_errors: int
    symbols: int
    symbol_errors: int


def simulate_block(p: SimPoint, block: int, n_symbols: int) -> _BlockResult:
    """Simulate one independently seeded block of ``n_symbols`` symbols."""
    c = p.constellation
    nbits = c.bits_per_symbol
    bit_rng = _block_rng(p.seed, block, _STREAM_BITS)
    bits = bit_rng.integers(0, 2, size=n_symbols * nbits, dtype=np.uint8)
    weights = 1 << np.arange(nbits - 1, -1, -1, dtype=np.int64)
    tx = c.index_of_label[bits.reshape(n_symbols, nbits) @ weights]

    n0 = ebn0_to_n0(p.ebn0_db, c.m)
    shape = (n_symbols, p.diversity)
    gains = sample_gains(p.rician, _block_rng(p.seed, block, _STREAM_GAINS), shape)
    noise = complex_normal(_block_rng(p.seed, block, _STREAM_NOISE), shape, n0)
    received = gains * c.symbols[tx][:, None] + noise

    rx = kernels.mrc_detect(gains, received, c.symbols)
    bit_errors, symbol_errors = kernels.count_errors(tx, rx, c.labels, nbits)
    return _BlockResult(n_symbols * nbits, bit_errors, n_symbols, symbol_errors)


def _block_sizes(p: SimPoint) -> list[int]:
    nbits = p.constellation.bits_per_symbol
    per_block = max(1, p.stop.batch_bits // nbits)
    max_symbols = max(1, p.stop.max_bits // nbits)
    full, rest = divmod(max_symbols, per_block)
    return [per_block] * full + ([rest] if rest else [])


def default_workers() -> int:
    env = os.environ.get("RICLINK_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ParameterError(f"RICLINK_WORKERS must be an integer, got {env!r}") from None
        if workers < 1:
            raise ParameterError("RICLINK_WORKERS must be >= 1")
        return workers
    return 1


def run_point(p: SimPoint, workers: int | None = None) -> BerEstimate:
    """Simulate ``p`` until the stopping rule fires.

    Counters are identical for any ``workers`` value.
    """
    workers = default_workers() if workers is None else int(workers)
    sizes = _block_sizes(p)
    bits = bit_errors = symbols = symbol_errors = 0

    def absorb(r: _BlockResult) -> bool:
        nonlocal bits, bit_errors, symbols, symbol_errors
        bits += r.bits
        bit_errors += r.bit_errors
        symbols += r.symbols
        symbol_errors += r.symbol_errors
        return bit_errors >= p.stop.min_bit_errors

    if workers <= 1:
        for block, n in enumerate(sizes):
            if absorb(simulate_block(p, block, n)):
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = False
            for start in range(0, len(sizes), workers):
                wave = range(start, min(start + workers, len(sizes)))
                results = list(pool.map(lambda b: simulate_block(p, b, sizes[b]), wave))
                for r in results:
                    if absorb(r):
                        done = True
                        break
                if done:
                    break

    ber = ber_of(bit_errors, bits)
    return BerEstimate(
        bits_sent=bits,
        bit_errors=bit_errors,
        symbols_sent=symbols,
        symbol_errors=symbol_errors,
        ber=ber,
        ser=symbol_errors / symbols,
        ci95=wilson_ci(bit_errors, bits),
    )


def cell_seed(master_seed: int, scheme, m, ebn0_db, diversity, rician: RicianParams) -> int:
    """64-bit seed for one sweep cell, hashed from the master seed and cell coordinates."""
    coords = [
        int(master_seed),
        Scheme.parse(scheme).value,
        int(m),
        repr(float(ebn0_db)),
        int(diversity),
        repr(rician.k_factor),
        rician.model.value,
        int(rician.n_scatterers),
        repr(float(rician.los_phase)),
    ]
    digest = hashlib.blake2b(json.dumps(coords).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SweepConfig:
    """Grid of simulation cells; the CLI builds this from flags or JSON."""

    modulations: tuple[tuple[Scheme, int], ...]
    ebn0_db: tuple[float, ...]
    diversity: tuple[int, ...]
    k_factor: tuple[float, ...]
    model: str = "gaussian"
    n_scatterers: int = 16
    stop: StoppingRule = field(default_factory=StoppingRule)
    seed: int = 0
    output: str | None = None

    def cells(self) -> list[SimPoint]:
        for name in ("modulations", "ebn0_db", "diversity", "k_factor"):
            if not getattr(self, name):
                raise ParameterError(f"sweep axis {name!r} is empty")
        points = []
        for (scheme, m), k, div, e in itertools.product(
            self.modulations, self.k_factor, self.diversity, self.ebn0_db
        ):
            try:
                rician = RicianParams(k, self.model, self.n_scatterers)
                seed = cell_seed(self.seed, scheme, m, e, div, rician)
                points.append(SimPoint(scheme, m, e, div, rician, self.stop, seed))
            except RiclinkError as exc:
                raise type(exc)(
                    f"invalid cell ({scheme}, M={m}, Eb/N0={e}, L={div}, K={k}): {exc}"
                ) from exc
        return points


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[tuple[SimPoint, BerEstimate]]:
    """Run every cell of the grid in deterministic order."""
    results = []
    for p in cfg.cells():
        try:
            results.append((p, run_point(p, workers)))
        except RiclinkError as exc:
            raise type(exc)(f"cell {p.describe()} failed: {exc}") from exc
    return results
