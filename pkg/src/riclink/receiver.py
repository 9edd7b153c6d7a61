"""Coherent maximal-ratio combining and hard nearest-point detection (perfect CSI)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riclink import kernels
from riclink.channel import BranchObservation
from riclink.errors import DegenerateChannelError
from riclink.modem import Constellation


@dataclass(frozen=True)
class DecisionStatistic:
    combined: complex
    snr_scale: float


def mrc_combine(obs: BranchObservation) -> DecisionStatistic:
    """Combine branches as sum(conj(h) r) / sum(|h|^2).

    Raises DegenerateChannelError when every gain is zero.
    """
    combined, scale = kernels.mrc_combine(
        obs.gains.reshape(1, -1), obs.received.reshape(1, -1)
    )
    if scale[0] == 0.0:
        raise DegenerateChannelError("all branch gains are zero")
    return DecisionStatistic(complex(combined[0]), float(scale[0]))


def detect_nearest(d: DecisionStatistic | complex, c: Constellation) -> int:
    """Index of the closest constellation point; ties go to the lowest index."""
    z = d.combined if isinstance(d, DecisionStatistic) else d
    return int(kernels.detect_nearest(np.array([z], dtype=np.complex128), c.symbols)[0])


def detect_block(gains: np.ndarray, received: np.ndarray, c: Constellation) -> np.ndarray:
    """Combine and detect a block of (n, L) observations; -1 marks a degenerate channel."""
    return kernels.mrc_detect(gains, received, c.symbols)
