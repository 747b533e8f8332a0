"""Separation quality metrics: output/source matching, SINR and SER.

Blind separation recovers sources only up to a permutation and per-output
complex scales, so every metric first resolves that ambiguity: outputs are
matched one-to-one to sources by maximizing the total score (exhaustively
for the small dimensions used here) and each matched row is rescaled by its
least-squares factor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = ["AmbiguityMap", "resolve_ambiguity", "ser", "sinr"]

# exhaustive assignment up to this many outputs; greedy beyond
_EXHAUSTIVE_LIMIT = 7


@dataclass
class AmbiguityMap:
    """Output-to-source assignment: ``permutation[i]`` is the output row
    matched to source i, ``scales[i]`` its least-squares complex factor."""

    permutation: tuple
    scales: tuple


def _best_match(score):
    """Row-to-column assignment maximizing the summed score.

    Exhaustive for up to _EXHAUSTIVE_LIMIT rows (ties resolve to the first
    permutation in lexicographic order); greedy largest-score-first beyond
    that.  Returns ``cols`` with ``cols[row] = col``.
    """
    S = np.asarray(score, dtype=float)
    M = S.shape[0]
    if M <= _EXHAUSTIVE_LIMIT:
        best = None
        best_total = -np.inf
        for perm in itertools.permutations(range(M)):
            total = sum(S[i, perm[i]] for i in range(M))
            if total > best_total:
                best_total = total
                best = perm
        return list(best)
    S = S.copy()
    cols = [-1] * M
    for _ in range(M):
        i, j = np.unravel_index(np.argmax(S), S.shape)
        cols[i] = int(j)
        S[i, :] = -np.inf
        S[:, j] = -np.inf
    return cols


def resolve_ambiguity(Z, S):
    """Match separator outputs to sources and rescale them.

    Rows of Z are matched to rows of S by maximizing the total absolute
    normalized correlation; each matched output is scaled by
    ``<s, z> / <z, z>`` (with ``<a, b> = sum(a * conj(b))``), the
    least-squares factor.  Zero output rows get correlation 0 (matched
    last) and scale 0.

    Returns
    -------
    (AmbiguityMap, aligned) where ``aligned[i]`` estimates ``S[i]``.
    """
    Z = np.asarray(Z, dtype=complex)
    S = np.asarray(S, dtype=complex)
    if Z.shape != S.shape:
        raise ValueError(f"shape mismatch {Z.shape} vs {S.shape}")
    M = Z.shape[0]
    zn = np.linalg.norm(Z, axis=1)
    sn = np.linalg.norm(S, axis=1)
    inner = S @ Z.conj().T  # inner[i, k] = <s_i, z_k>
    denom = np.outer(sn, zn)
    corr = np.zeros((M, M))
    np.divide(np.abs(inner), denom, out=corr, where=denom > 0)
    match = _best_match(corr)  # source i -> output match[i]
    perm = []
    scales = []
    aligned = np.empty_like(Z)
    for i in range(M):
        k = match[i]
        zz = float(np.vdot(Z[k], Z[k]).real)
        c = inner[i, k] / zz if zz > 0.0 else 0.0 + 0.0j
        perm.append(k)
        scales.append(complex(c))
        aligned[i] = c * Z[k]
    return AmbiguityMap(permutation=tuple(perm), scales=tuple(scales)), aligned


def ser(aligned, S, constellation):
    """Symbol error rate of nearest-point decisions on aligned outputs."""
    dz = constellation.decide(aligned)
    ds = constellation.decide(S)
    return float(np.mean(dz != ds))


def sinr(W, A, noise_var):
    """Per-output and average SINR of a separator against a known channel.

    The global response ``G = W @ A`` is column-matched to outputs
    (maximum total |G|); output k with matched source m scores
    ``|G[k, m]|^2 / (sum_{l != m} |G[k, l]|^2 + noise_var * ||w_k||^2)``.
    A 0/0 ratio is defined as 0; a finite numerator over a zero denominator
    (perfect noiseless separation) returns ``inf``.

    Returns
    -------
    (per_output, average) as linear ratios (not dB).
    """
    W = np.asarray(W, dtype=complex)
    A = np.asarray(A, dtype=complex)
    G = W @ A
    M = G.shape[0]
    match = _best_match(np.abs(G))  # output k -> source match[k]
    g2 = np.abs(G) ** 2
    per = []
    for k in range(M):
        m = match[k]
        sig = g2[k, m]
        interf = float(np.sum(g2[k, :]) - sig)
        noise = noise_var * float(np.vdot(W[k], W[k]).real)
        den = interf + noise
        if den == 0.0:
            per.append(0.0 if sig == 0.0 else np.inf)
        else:
            per.append(float(sig / den))
    return per, float(np.mean(per))
