"""Sliding-window adaptive separation.

Per incoming sample: transform it by the current separator, slide it into a
length-K window of transformed samples, run a strategy-dependent set of
rotation pairs (small-angle shear followed by the optimal plane rotation,
both accumulated into W), then rescale every row.  The emitted output is the
newest window column after the step's updates.

Strategies
----------
``sweep``   all M(M-1)/2 pairs per step.
``single``  one pair per step from a cyclic cursor, so every search
            direction is visited periodically.
``two``     the pair with the largest constant-modulus deviation plus one
            cursor pair (cursor advanced past duplicates).

Stability
---------
The constant-modulus cost of a short window cannot distinguish true
separation from extracting the same source twice (both give near-unit
moduli), so an unconstrained update sequence eventually drives W toward a
singular matrix.  Two guards keep the stochastic updates on the separating
branch: shear magnitudes are capped by a hold-then-floor schedule (large
steps only during the initial transient), and any shear that would push its
two window rows past a correlation threshold while increasing their
correlation is skipped.  Plane rotations are unitary and need no guard.  Starting W from a whitener fitted on the
warm-up samples (see ``W0``) removes most of the transient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import InvalidInputError
from .rotations import (
    ShearParams,
    _beta_small_angle,
    _pair_stats,
    apply_two_row,
    givens_params,
    norm_param,
)
from .signals import cm_cost

__all__ = [
    "STRATEGIES",
    "AdaptiveState",
    "adaptive_init",
    "adaptive_step",
    "select_max_deviation",
]

STRATEGIES = ("sweep", "single", "two")

# Shear step-size schedule: large steps while the separator is still far
# from the solution, small steps afterwards so that window noise averages
# out instead of being chased.
_CAP_HOLD = 0.15
_HOLD_ROTATIONS = 250
_CAP_FLOOR = 0.05
# Step used when the small-angle model is not a valid descent step.
_INVALID_STEP = 0.05
# Shears that would push the pair correlation above this while increasing
# it are skipped (collapse guard); de-correlating shears always run.
_RHO_MAX = 0.9


@dataclass
class AdaptiveState:
    W: np.ndarray  # (M, M) separator
    window: np.ndarray  # (M, K) last K transformed samples
    filled: int  # samples currently held (< K during warm-up)
    t: int  # samples ingested so far
    strategy: str
    cursor: int = 0  # cyclic pair cursor for auto selection
    rotations: int = 0  # pair visits
    cost_trace: Optional[list] = None
    _pairs: list = field(default_factory=list, repr=False)


def adaptive_init(M, K, strategy="two", W0=None, record_trace=False):
    """Fresh adaptive state: identity separator (or W0), empty window.

    Passing a whitener fitted on the first K observations as ``W0`` warm
    starts the separator near a unitary residual channel and shortens the
    convergence transient considerably.
    """
    if K < 2:
        raise ValueError("window length must be >= 2")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    W = np.eye(M, dtype=complex) if W0 is None else np.array(W0, dtype=complex)
    if W.shape != (M, M):
        raise ValueError(f"W0 must be {M}x{M}")
    return AdaptiveState(
        W=W,
        window=np.zeros((M, K), dtype=complex),
        filled=0,
        t=0,
        strategy=strategy,
        cost_trace=[] if record_trace else None,
        _pairs=[(p, q) for p in range(M - 1) for q in range(p + 1, M)],
    )


def select_max_deviation(window):
    """Row pair with the largest summed constant-modulus deviation.

    The pair sum is maximized by the two rows of largest per-row deviation;
    ties break toward the smallest indices.
    """
    W = np.asarray(window)
    power = W.real**2 + W.imag**2
    dev = np.sum((power - 1.0) ** 2, axis=1)
    order = np.argsort(-dev, kind="stable")
    p, q = int(order[0]), int(order[1])
    return (p, q) if p < q else (q, p)


def _selected_pairs(state):
    if state.strategy == "sweep":
        return list(state._pairs)
    npairs = len(state._pairs)
    if state.strategy == "single":
        pair = state._pairs[state.cursor % npairs]
        state.cursor = (state.cursor + 1) % npairs
        return [pair]
    # two rotations: max-deviation pair first, then the cursor pair
    pm = select_max_deviation(state.window)
    pa = state._pairs[state.cursor % npairs]
    if pa == pm:
        state.cursor = (state.cursor + 1) % npairs
        pa = state._pairs[state.cursor % npairs]
    state.cursor = (state.cursor + 1) % npairs
    return [pm, pa]


def _row_correlation(a, b):
    d = np.linalg.norm(a) * np.linalg.norm(b)
    return abs(np.vdot(a, b)) / d if d > 0.0 else 0.0


def _guarded_shear(window, p, q, cap):
    """Small-angle shear with capped magnitude, or None when skipped.

    Uses the closed-form phase and magnitude; when the magnitude formula is
    not a valid descent step (non-positive curvature or ratio outside the
    arctanh domain) a fixed small step in the descent direction is taken
    instead.  A step that would raise the pair's row correlation above the
    collapse threshold is skipped.
    """
    r1, r2, r3 = _pair_stats(window[p], window[q])
    beta = _beta_small_angle(r1, r2, r3)
    cb, sb = math.cos(beta), math.sin(beta)
    cj = cb * r2 + sb * r3
    num = float(np.dot(cj, 1.0 - r1))
    den = float(np.dot(r1, r1) - np.sum(r1) + np.dot(cj, cj))
    if num == 0.0:
        return None
    if den > 0.0 and abs(num) < den:
        gamma = 0.5 * math.atanh(num / den)
        if abs(gamma) > cap:
            gamma = math.copysign(cap, gamma)
    else:
        gamma = math.copysign(min(cap, _INVALID_STEP), num)
    ch = math.cosh(gamma)
    sh = complex(cb, sb) * math.sinh(gamma)
    new_p = ch * window[p] + sh * window[q]
    new_q = np.conj(sh) * window[p] + ch * window[q]
    rho_after = _row_correlation(new_p, new_q)
    if rho_after > _RHO_MAX and rho_after > _row_correlation(window[p], window[q]):
        return None
    return ShearParams(p=p, q=q, ch=ch, sh=sh)


def adaptive_step(state, y):
    """Ingest one sample; returns the separated output vector.

    The first K samples only pass through W (warm-up).  Afterwards each step
    runs the strategy's rotation pairs on the window and W, then rescales
    all rows.  Non-finite input raises InvalidInputError with the state
    untouched.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    M, K = state.window.shape
    if y.shape[0] != M:
        raise ValueError(f"sample has {y.shape[0]} entries, expected {M}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("non-finite input sample rejected")
    z = state.W @ y
    if state.filled < K:
        state.window[:, state.filled] = z
        state.filled += 1
    else:
        state.window[:, :-1] = state.window[:, 1:]
        state.window[:, -1] = z
    state.t += 1
    if state.t <= K:
        return z.copy()
    for p, q in _selected_pairs(state):
        cap = _CAP_HOLD if state.rotations < _HOLD_ROTATIONS else _CAP_FLOOR
        h = _guarded_shear(state.window, p, q, cap)
        if h is not None:
            apply_two_row(h, state.window)
            apply_two_row(h, state.W)
        g = givens_params(state.window[p], state.window[q], p, q)
        apply_two_row(g, state.window)
        apply_two_row(g, state.W)
        state.rotations += 1
    lams = np.array([norm_param(state.window[i]) for i in range(M)])
    state.window *= lams[:, None]
    state.W *= lams[:, None]
    if state.cost_trace is not None:
        state.cost_trace.append(cm_cost(state.window))
    return state.window[:, -1].copy()
