"""M-PSK / M-QAM constellations with Gray labels, and bit <-> symbol mapping.

All constellations live in complex baseband and are scaled to unit average
symbol energy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from riclink.errors import ConstellationSpecError, DomainError, FramingError

MIN_M = 2
MAX_M = 1024


class Scheme(str, enum.Enum):
    PSK = "psk"
    QAM = "qam"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        try:
            return cls(str(value.value if isinstance(value, Scheme) else value).lower())
        except ValueError:
            raise ConstellationSpecError(f"unknown modulation scheme {value!r}") from None


@dataclass(frozen=True)
class ConstellationPoint:
    i: float
    q: float
    amp: float
    phase: float

    @classmethod
    def from_iq(cls, i: float, q: float) -> "ConstellationPoint":
        return cls(i=i, q=q, amp=math.hypot(i, q), phase=math.atan2(q, i) % (2 * math.pi))

    @property
    def value(self) -> complex:
        return complex(self.i, self.q)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Immutable constellation.

    ``labels[k]`` is the integer bit label of symbol index ``k``; the label is
    written MSB first when expanded to bits.
    """

    scheme: Scheme
    m: int
    points: tuple[ConstellationPoint, ...]
    labels: np.ndarray
    phase_offset: float = 0.0
    symbols: np.ndarray = field(init=False, repr=False)
    index_of_label: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        symbols = np.array([p.value for p in self.points], dtype=np.complex128)
        labels = np.asarray(self.labels, dtype=np.int64)
        inverse = np.full(self.m, -1, dtype=np.int64)
        inverse[labels] = np.arange(self.m)
        if (inverse < 0).any():
            raise ConstellationSpecError("bit labels are not a bijection")
        for arr in (symbols, labels, inverse):
            arr.flags.writeable = False
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index_of_label", inverse)

    @property
    def bits_per_symbol(self) -> int:
        return self.m.bit_length() - 1

    @property
    def name(self) -> str:
        return f"{self.m}-{self.scheme.value.upper()}"

    @property
    def is_square_qam(self) -> bool:
        return self.scheme is Scheme.QAM and self.bits_per_symbol % 2 == 0

    def label_bits(self, index: int) -> str:
        return format(int(self.labels[index]), f"0{self.bits_per_symbol}b")

    def __repr__(self) -> str:
        return f"Constellation({self.name})"


def gray_code(index: int) -> int:
    """Binary-reflected Gray code of ``index``."""
    return index ^ (index >> 1)


def _check_m(m: int, lowest: int) -> int:
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise ConstellationSpecError(f"M must be an integer, got {m!r}")
    m = int(m)
    if m < lowest or m > MAX_M or m & (m - 1):
        raise ConstellationSpecError(
            f"M must be a power of 2 in [{lowest}, {MAX_M}], got {m}"
        )
    return m


def _normalized(iq: np.ndarray) -> np.ndarray:
    return iq / math.sqrt(np.mean(np.abs(iq) ** 2))


def _build(scheme: Scheme, m: int, iq: np.ndarray, labels, offset: float = 0.0):
    points = tuple(ConstellationPoint.from_iq(float(z.real), float(z.imag)) for z in iq)
    return Constellation(scheme, m, points, np.asarray(labels), offset)


@lru_cache(maxsize=None)
def build_psk(m: int, phase_offset: float = 0.0) -> Constellation:
    """Unit-amplitude M-PSK; point ``k`` sits at ``phase_offset + 2*pi*k/m``."""
    m = _check_m(m, MIN_M)
    angles = phase_offset + 2 * np.pi * np.arange(m) / m
    iq = np.exp(1j * angles)
    # exact zeros for axis-aligned points (cos(pi/2) is 6e-17, not 0)
    iq = np.where(np.abs(iq.real) < 1e-15, 0.0, iq.real) + 1j * np.where(
        np.abs(iq.imag) < 1e-15, 0.0, iq.imag
    )
    labels = [gray_code(k) for k in range(m)]
    return _build(Scheme.PSK, m, iq, labels, float(phase_offset))


def _pam_levels(bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Levels -(L-1)..(L-1) step 2 and their Gray labels, in ascending order."""
    count = 1 << bits
    levels = np.arange(-(count - 1), count, 2, dtype=np.float64)
    return levels, np.array([gray_code(k) for k in range(count)], dtype=np.int64)


def _rect_grid(bits_i: int, bits_q: int) -> tuple[np.ndarray, np.ndarray]:
    li, gi = _pam_levels(bits_i)
    lq, gq = _pam_levels(bits_q)
    iq = (li[:, None] + 1j * lq[None, :]).ravel()
    labels = ((gi[:, None] << bits_q) | gq[None, :]).ravel()
    return iq, labels


def _cross_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Fold the outer columns of a 2R x R Gray rectangle into the top and
    # bottom gaps of a side-s cross, s = R + 2b.
    iq, labels = _rect_grid((n + 1) // 2, (n - 1) // 2)
    rows = 1 << ((n - 1) // 2)
    b = rows // 4
    s = rows + 2 * b
    out = iq.copy()
    for k, z in enumerate(iq):
        ai, aq = abs(z.real), abs(z.imag)
        if ai > s - 1:
            u = int(ai - (s + 1)) // 2
            v = int(aq - 1) // 2
            new_i = math.copysign(rows - 1 - 2 * v, z.real)
            new_q = math.copysign(rows + 1 + 2 * u, z.imag)
            out[k] = complex(new_i, new_q)
    return out, labels


@lru_cache(maxsize=None)
def build_qam(m: int) -> Constellation:
    """Square QAM for even log2(m), cross QAM for odd (rectangular 4x2 for M=8)."""
    m = _check_m(m, 4)
    n = m.bit_length() - 1
    if n % 2 == 0:
        iq, labels = _rect_grid(n // 2, n // 2)
    elif n == 3:
        iq, labels = _rect_grid(2, 1)
    else:
        iq, labels = _cross_grid(n)
    return _build(Scheme.QAM, m, _normalized(iq), labels)


def build(scheme: "str | Scheme", m: int, phase_offset: float = 0.0) -> Constellation:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.PSK:
        return build_psk(m, phase_offset)
    if phase_offset:
        raise ConstellationSpecError("phase_offset applies to PSK only")
    return build_qam(m)


def map_bits(c: Constellation, bits) -> np.ndarray:
    """Group ``bits`` MSB-first into symbols and return symbol indices."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    n = c.bits_per_symbol
    if bits.size % n:
        raise FramingError(
            f"{bits.size} bits is not a multiple of {n} bits per symbol for {c.name}"
        )
    if bits.size and ((bits < 0) | (bits > 1)).any():
        raise DomainError("bit stream must contain only 0 and 1")
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    label = bits.reshape(-1, n) @ weights
    return c.index_of_label[label]


def demap_bits(c: Constellation, indices) -> np.ndarray:
    """Inverse of :func:`map_bits`."""
    indices = np.asarray(indices, dtype=np.int64).ravel()
    if indices.size and ((indices < 0) | (indices >= c.m)).any():
        raise DomainError(f"symbol index out of range [0, {c.m})")
    n = c.bits_per_symbol
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    label = c.labels[indices]
    return ((label[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def modulate(c: Constellation, indices) -> np.ndarray:
    return c.symbols[np.asarray(indices, dtype=np.int64)]


def min_distance(c: Constellation) -> float:
    z = c.symbols
    d = np.abs(z[:, None] - z[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())
