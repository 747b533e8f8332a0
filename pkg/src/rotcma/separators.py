"""Batch separation algorithms.

Two Jacobi-style sweep algorithms and a least-squares baseline:

* ``run_gcma``: prewhiten, then sweep optimal plane rotations over all row
  pairs; the separator is the accumulated rotation times the whitener.
* ``run_hgcma``: per pair apply a shear (selectable solver) and a plane
  rotation, then rescale all rows once per sweep; shears repair the
  residual non-unitarity that a short-sample whitener leaves behind, which
  is why this variant holds up at small K.
* ``run_lscma``: alternating projection baseline; project outputs onto unit
  modulus and refit the separator by least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotations import (
    apply_norm,
    apply_two_row,
    givens_params,
    make_norm,
    shear_exact,
    shear_linear,
    shear_semi_exact,
)
from .signals import cm_cost
from .whitening import fit_whitener

__all__ = ["SeparatorConfig", "SeparatorState", "run_gcma", "run_hgcma", "run_lscma"]

_SHEAR_SOLVERS = {
    "exact": shear_exact,
    "semi": shear_semi_exact,
    "linear": shear_linear,
}


@dataclass
class SeparatorConfig:
    sweeps: int = 10
    shear_variant: str = "linear"  # exact | semi | linear
    record_trace: bool = True
    epsilon: float = 0.0  # early stop when per-sweep cost decrease < epsilon

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.shear_variant not in _SHEAR_SOLVERS:
            raise ValueError(f"unknown shear variant {self.shear_variant!r}")


@dataclass
class SeparatorState:
    """Separator W, the transformed block (W @ Y_original), and bookkeeping.

    ``cost_trace`` holds the block CM cost before any rotation and after
    each update (plane rotations for run_gcma; shear+rotation pair visits
    and the per-sweep rescaling for run_hgcma; refit iterations for
    run_lscma) when trace recording is on.
    """

    W: np.ndarray
    work: np.ndarray
    cost_trace: list = field(default_factory=list)
    rotations: int = 0


def _pairs(M):
    return [(p, q) for p in range(M - 1) for q in range(p + 1, M)]


def run_gcma(Y, M, config=None):
    """Prewhitened plane-rotation sweeps minimizing the CM cost.

    Whitens Y down to M rows, then for each sweep visits all row pairs in
    lexicographic order, applying the closed-form optimal rotation to the
    work block and accumulating it into the separator.  The final separator
    is ``V @ B``.
    """
    config = config or SeparatorConfig()
    Y = np.asarray(Y, dtype=complex)
    if not np.all(np.isfinite(Y)):
        raise ValueError("observation block has non-finite entries")
    wh = fit_whitener(Y, M)
    work = wh.matrix @ Y
    V = np.eye(M, dtype=complex)
    state = SeparatorState(W=None, work=work)
    if config.record_trace:
        state.cost_trace.append(cm_cost(work))
    prev_cost = cm_cost(work) if config.epsilon > 0 else None
    for _ in range(config.sweeps):
        for p, q in _pairs(M):
            g = givens_params(work[p], work[q], p, q)
            apply_two_row(g, work)
            apply_two_row(g, V)
            state.rotations += 1
            if config.record_trace:
                state.cost_trace.append(cm_cost(work))
        if config.epsilon > 0:
            cost = cm_cost(work)
            if prev_cost - cost < config.epsilon:
                break
            prev_cost = cost
    state.W = V @ wh.matrix
    return state


def run_hgcma(Y, M, config=None):
    """Shear + plane-rotation + normalization sweeps.

    Works on the square M-row block directly; when N > M the signal-subspace
    whitener reduces the input first and is folded into the returned
    separator.  Each pair visit applies the selected shear solver then the
    optimal plane rotation; after every sweep all rows get their optimal
    rescaling.  Everything is accumulated into W.
    """
    config = config or SeparatorConfig()
    Y = np.asarray(Y, dtype=complex)
    if not np.all(np.isfinite(Y)):
        raise ValueError("observation block has non-finite entries")
    N, K = Y.shape
    if K < 2:
        raise ValueError("need at least 2 samples")
    if N > M:
        wh = fit_whitener(Y, M)
        work = wh.matrix @ Y
        pre = wh.matrix
    elif N == M:
        work = Y.copy()
        pre = np.eye(M, dtype=complex)
    else:
        raise ValueError(f"fewer rows ({N}) than sources ({M})")
    solver = _SHEAR_SOLVERS[config.shear_variant]
    Wc = np.eye(M, dtype=complex)
    state = SeparatorState(W=None, work=work)
    if config.record_trace:
        state.cost_trace.append(cm_cost(work))
    prev_cost = cm_cost(work) if config.epsilon > 0 else None
    all_rows = tuple(range(M))
    for _ in range(config.sweeps):
        for p, q in _pairs(M):
            h = solver(work[p], work[q], p, q)
            apply_two_row(h, work)
            apply_two_row(h, Wc)
            g = givens_params(work[p], work[q], p, q)
            apply_two_row(g, work)
            apply_two_row(g, Wc)
            state.rotations += 1
            if config.record_trace:
                state.cost_trace.append(cm_cost(work))
        # rescaling all rows once per sweep converges markedly faster than
        # the per-pair placement and is what the adaptive loop does too
        d = make_norm(work, all_rows)
        apply_norm(d, work)
        apply_norm(d, Wc)
        if config.record_trace:
            state.cost_trace.append(cm_cost(work))
        if config.epsilon > 0:
            cost = cm_cost(work)
            if prev_cost - cost < config.epsilon:
                break
            prev_cost = cost
    state.W = Wc @ pre
    return state


def run_lscma(Y, M, iters=50):
    """Alternating least-squares baseline.

    Starts from the whitener, then repeats: separate, project every output
    entry onto the unit circle (zeros stay zero), and refit W by least
    squares against the projected targets.  Stops after ``iters`` iterations
    or when the relative W change drops below 1e-8.  A singular Gram matrix
    ``Y @ Y^H`` raises ``numpy.linalg.LinAlgError``.
    """
    Y = np.asarray(Y, dtype=complex)
    if not np.all(np.isfinite(Y)):
        raise ValueError("observation block has non-finite entries")
    wh = fit_whitener(Y, M)
    W = wh.matrix.copy()
    gram = Y @ Y.conj().T
    state = SeparatorState(W=W, work=W @ Y)
    state.cost_trace.append(cm_cost(state.work))
    for _ in range(iters):
        Z = W @ Y
        mod = np.abs(Z)
        target = np.divide(Z, mod, out=np.zeros_like(Z), where=mod > 0)
        rhs = target @ Y.conj().T
        W_new = np.linalg.solve(gram, rhs.conj().T).conj().T
        state.rotations += 1
        delta = np.linalg.norm(W_new - W) / max(np.linalg.norm(W), 1e-300)
        W = W_new
        state.cost_trace.append(cm_cost(W @ Y))
        if delta < 1e-8:
            break
    state.W = W
    state.work = W @ Y
    return state
