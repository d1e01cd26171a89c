"""MRT energy beams and max-min power allocation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateChannelError(ValueError):
    pass


@dataclass(frozen=True)
class PrecoderSet:
    directions: np.ndarray  # (M, N), unit-norm rows
    powers: np.ndarray  # (M,)

    @property
    def beams(self) -> np.ndarray:
        """Precoders w_m = direction_m * sqrt(P_m), one per row."""
        return self.directions * np.sqrt(self.powers)[:, None]


def mrt_precoders(channels, powers) -> PrecoderSet:
    H = np.atleast_2d(np.asarray(channels, dtype=complex))
    p = np.asarray(powers, dtype=float).reshape(-1)
    if len(p) != len(H):
        raise ValueError(f"{len(H)} channels but {len(p)} powers")
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0):
        raise DegenerateChannelError("MRT direction undefined for a zero channel")
    return PrecoderSet(directions=H / norms[:, None], powers=p)


def received_power(gamma, precoders: PrecoderSet) -> float:
    """Waveform-averaged power sum_m |gamma^H w_m|^2 at one receiver."""
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    W = precoders.beams
    if W.shape[1] != gamma.size:
        raise ValueError(f"channel has {gamma.size} entries, precoders {W.shape[1]}")
    return float(np.sum(np.abs(W @ gamma.conj()) ** 2))


def received_powers(channels, precoders: PrecoderSet) -> np.ndarray:
    """Vectorized ``received_power`` for every row of ``channels``."""
    H = np.atleast_2d(np.asarray(channels, dtype=complex))
    W = precoders.beams
    if W.shape[1] != H.shape[1]:
        raise ValueError("channel and precoder dimensions differ")
    return np.sum(np.abs(H.conj() @ W.T) ** 2, axis=1)


def dedicated_bound(gamma, power: float) -> float:
    """Power from the receiver's own MRT beam alone: P_i * ||gamma_i||^2."""
    if power < 0:
        raise ValueError("power must be non-negative")
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    return float(power * np.vdot(gamma, gamma).real)


def maxmin_power_allocation(gains, densities, budget: float) -> tuple[np.ndarray, float]:
    """Split ``budget`` so every density-weighted dedicated power is equal.

    Maximizing ``min_i P_i g_i / k_i`` under ``sum P_i <= budget`` is solved
    by equalization: ``t = budget / sum(k_i / g_i)`` and ``P_i = t k_i / g_i``.
    """
    g = np.asarray(gains, dtype=float).reshape(-1)
    k = np.asarray(densities, dtype=float).reshape(-1)
    if g.shape != k.shape:
        raise ValueError("gains and densities must have the same length")
    if np.any(g <= 0):
        raise DegenerateChannelError("max-min allocation needs strictly positive gains")
    if np.any(k <= 0) or not budget > 0:
        raise ValueError("densities and budget must be > 0")
    weights = k / g
    t = budget / float(np.sum(weights))
    return t * weights, t


def sdp_precoders(channels, densities, budget: float) -> PrecoderSet:
    """Optimal max-min precoders via semidefinite relaxation (not provided).

    Kept as the extension point for a full beamforming design; evaluation
    in this package uses MRT beams only.
    """
    raise NotImplementedError("SDP precoder design is out of scope; use mrt_precoders")
