"""MIMO signal model: constellations, sources, channels, observations.

The model is ``Y = A @ S + B`` with an N x M full-column-rank channel A,
unit-power i.i.d. sources S drawn from a finite alphabet, and circular
complex Gaussian noise B.  Reproducibility relies on numpy's PCG64
generator: every scenario derives independent substreams for the channel,
the sources and the noise by spawning its 64-bit seed, so that trials never
share random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "make_constellation",
    "gen_sources",
    "gen_channel",
    "ChannelScenario",
    "make_scenario",
    "scenario_sources",
    "observe",
    "noise_var_for_snr",
    "cm_cost",
]

# Channel draws are rejected until the smallest singular value clears this
# fraction of the largest.
_RANK_RATIO = 1e-6


@dataclass(frozen=True)
class Constellation:
    """A finite symbol alphabet with unit average power."""

    tag: str
    points: np.ndarray

    def decide(self, z):
        """Indices of the nearest constellation point, entrywise."""
        z = np.asarray(z, dtype=complex)
        d = np.abs(z[..., None] - self.points)
        return np.argmin(d, axis=-1)


def make_constellation(tag):
    """Build a constellation by tag: ``psk8`` or ``qam16``."""
    key = tag.lower()
    if key == "psk8":
        pts = np.exp(2j * np.pi * np.arange(8) / 8.0)
    elif key == "qam16":
        axis = np.array([-3.0, -1.0, 1.0, 3.0])
        pts = (axis[:, None] + 1j * axis[None, :]).ravel() / math.sqrt(10.0)
    else:
        raise ValueError(f"unknown constellation tag {tag!r}")
    return Constellation(tag=key, points=pts)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_sources(M, K, constellation, seed):
    """Draw an M x K block of i.i.d. uniform constellation symbols."""
    if M < 1 or K < 1:
        raise ValueError("M and K must be >= 1")
    rng = _rng(seed)
    idx = rng.integers(0, constellation.points.size, size=(M, K))
    return constellation.points[idx]


def gen_channel(M, N, seed):
    """Draw an N x M channel with i.i.d. unit-variance complex Gaussian entries.

    Draws are repeated (from the same stream) until the matrix is safely
    full column rank, so the scenario rank invariant holds by construction.
    """
    if N < M:
        raise ValueError("need at least as many receive as transmit antennas")
    rng = _rng(seed)
    while True:
        A = (rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))) / math.sqrt(2.0)
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] > _RANK_RATIO * sv[0]:
            return A


def noise_var_for_snr(M, snr_db):
    """Per-entry noise power for a target SNR in dB.

    With unit-power sources and unit-variance channel entries the received
    signal power per antenna is M, so ``sigma^2 = M / 10**(snr_db/10)``.
    """
    return M / 10.0 ** (snr_db / 10.0)


@dataclass
class ChannelScenario:
    """One frozen draw of the mixing model plus its noise configuration."""

    M: int
    N: int
    K: int
    A: np.ndarray
    noise_var: float
    constellation: Constellation
    seed: int

    def _child(self, index):
        return np.random.SeedSequence(entropy=self.seed, spawn_key=(index,))


# substream indices spawned off a scenario seed
_CHANNEL_STREAM = 0
_SOURCE_STREAM = 1
_NOISE_STREAM = 2


def make_scenario(M, N, K, snr_db, constellation, seed):
    """Build a scenario: channel from substream 0, noise power from the SNR."""
    if isinstance(constellation, str):
        constellation = make_constellation(constellation)
    ch_ss = np.random.SeedSequence(entropy=seed, spawn_key=(_CHANNEL_STREAM,))
    A = gen_channel(M, N, np.random.default_rng(ch_ss))
    return ChannelScenario(
        M=M,
        N=N,
        K=K,
        A=A,
        noise_var=noise_var_for_snr(M, snr_db),
        constellation=constellation,
        seed=seed,
    )


def scenario_sources(scenario, K=None):
    """Source block for a scenario, drawn from its dedicated substream."""
    rng = np.random.default_rng(scenario._child(_SOURCE_STREAM))
    return gen_sources(scenario.M, K if K is not None else scenario.K, scenario.constellation, rng)


def observe(scenario, S):
    """Mix sources through the channel and add noise: ``Y = A @ S + B``.

    With ``noise_var == 0`` the result is exactly ``A @ S``.  The noise is
    circular complex Gaussian with per-entry power ``noise_var``, drawn from
    the scenario's noise substream (deterministic per scenario).
    """
    S = np.asarray(S)
    if S.shape[0] != scenario.M:
        raise ValueError(f"source block has {S.shape[0]} rows, expected {scenario.M}")
    Y = scenario.A @ S
    if scenario.noise_var > 0.0:
        rng = np.random.default_rng(scenario._child(_NOISE_STREAM))
        shape = (scenario.N, S.shape[1])
        B = math.sqrt(scenario.noise_var / 2.0) * (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        )
        Y = Y + B
    return Y


def cm_cost(Z):
    """Constant-modulus deviation ``sum((|z|^2 - 1)^2)`` over all entries."""
    Z = np.asarray(Z)
    p = Z.real**2 + Z.imag**2
    return float(np.sum((p - 1.0) ** 2))
