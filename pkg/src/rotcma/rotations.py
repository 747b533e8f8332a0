"""Elementary two-row transforms and their constant-modulus parameter solvers.

Three transform families act on a pair of rows (p, q) of a complex block:

* unitary plane rotations ``[[c, s], [-conj(s), c]]`` with ``c = cos(theta)``,
  ``s = exp(1j*alpha) * sin(theta)``;
* hyperbolic (shear) transforms ``[[ch, sh], [conj(sh), ch]]`` with
  ``ch = cosh(gamma)``, ``sh = exp(1j*beta) * sinh(gamma)``;
* positive row rescalings.

Each solver picks its parameters to minimize the constant-modulus deviation
``sum((|z|^2 - 1)^2)`` of the affected rows.  The plane-rotation solver is
closed form (smallest eigenvector of a 3x3 accumulation).  The shear solver
comes in three flavours: ``exact`` (constrained quadratic minimization on a
hyperboloid via a degree-6 resolvent), ``semi`` (phase from the small-angle
formula, magnitude from a degree-4 resolvent), and ``linear`` (both from
small-angle formulas).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .linalg import (
    DegeneratePencilError,
    _jacobi_sym_small,
    eig_sym3,
    gen_eig,
    real_roots,
)

__all__ = [
    "GivensParams",
    "ShearParams",
    "NormParams",
    "givens_params",
    "shear_linear",
    "shear_semi_exact",
    "shear_exact",
    "norm_param",
    "make_norm",
    "apply_two_row",
    "apply_norm",
]

# Step cap for the small-angle shear when its arctanh argument is clamped.
GAMMA_MAX = 1.0


@dataclass
class GivensParams:
    """Unitary plane rotation acting on rows p < q."""

    p: int
    q: int
    c: float  # cos(theta) >= 0
    s: complex  # exp(1j*alpha) * sin(theta)


@dataclass
class ShearParams:
    """Hyperbolic transform acting on rows p < q, plus solver diagnostics."""

    p: int
    q: int
    ch: float  # cosh(gamma) >= 1
    sh: complex  # exp(1j*beta) * sinh(gamma)
    method: str = "linear"  # solver that produced the parameters
    fallback_from: Optional[str] = None  # requested solver, if it fell back
    clamped: bool = False  # small-angle step was clamped
    degenerate: bool = False  # used the singular-shift completion branch
    lam: Optional[float] = None  # selected multiplier (exact/semi)
    poly_residual: Optional[float] = None  # |P(lam)| / (max|c| max(1,|lam|)^d)
    constraint_residual: Optional[float] = None  # |u^T J u - 1| before rescale
    objective: Optional[float] = None  # value of the quadratic objective


@dataclass
class NormParams:
    """Per-row positive rescalings, identity (1.0) for zero rows."""

    rows: tuple
    lams: tuple
    degenerate: tuple  # True where the row was zero


# ---------------------------------------------------------------------------
# Plane rotation solver
# ---------------------------------------------------------------------------


def _pair_stats(row_p, row_q):
    """Per-sample accumulation vectors for a row pair.

    Returns (r1, r2, r3): half the pair power sum, and the real/imaginary
    parts of the cross product row_p * conj(row_q), each of length K.
    """
    row_p = np.asarray(row_p, dtype=complex)
    row_q = np.asarray(row_q, dtype=complex)
    sp = row_p.real**2 + row_p.imag**2
    sq = row_q.real**2 + row_q.imag**2
    cross = row_p * np.conj(row_q)
    return 0.5 * (sp + sq), cross.real, cross.imag


def givens_params(row_p, row_q, p=0, q=1):
    """Optimal plane rotation for one row pair.

    Accumulates the 3x3 matrix T of squared-modulus statistics, takes the
    unit eigenvector v of its smallest eigenvalue with v[0] >= 0, and maps it
    to (c, s) through ``c = sqrt((1 + v1)/2)``,
    ``s = (v2 + 1j*v3) / sqrt(2*(1 + v1))``.

    A degenerate smallest eigenspace (multiplicity >= 2) is resolved by the
    direction of maximal first component, which reduces to the identity
    rotation whenever e1 lies in the eigenspace.
    """
    row_p = np.asarray(row_p, dtype=complex)
    row_q = np.asarray(row_q, dtype=complex)
    sp = row_p.real**2 + row_p.imag**2
    sq = row_q.real**2 + row_q.imag**2
    cross = row_p * np.conj(row_q)
    t1 = 0.5 * (sp - sq)
    t2 = cross.real
    t3 = cross.imag
    T = np.empty((3, 3))
    T[0, 0] = np.dot(t1, t1)
    T[0, 1] = T[1, 0] = np.dot(t1, t2)
    T[0, 2] = T[2, 0] = np.dot(t1, t3)
    T[1, 1] = np.dot(t2, t2)
    T[1, 2] = T[2, 1] = np.dot(t2, t3)
    T[2, 2] = np.dot(t3, t3)
    w, V = eig_sym3(T)
    cluster = w <= w[0] + 1e-11 * max(1.0, abs(w[2]))
    if np.count_nonzero(cluster) == 1:
        v = V[:, 0]
        if v[0] < 0.0:
            v = -v
    else:
        # project e1 onto the minimal eigenspace; favors the no-op rotation
        Vc = V[:, cluster]
        proj = Vc @ Vc[0, :]
        nrm = np.linalg.norm(proj)
        if nrm > 1e-8:
            v = proj / nrm
        else:
            v = Vc[:, 0]
            lead = np.argmax(np.abs(v) > 1e-12)
            if v[lead] < 0.0:
                v = -v
    c = math.sqrt(0.5 * (1.0 + v[0]))
    s = (v[1] + 1j * v[2]) / math.sqrt(2.0 * (1.0 + v[0]))
    return GivensParams(p=p, q=q, c=c, s=s)


# ---------------------------------------------------------------------------
# Shear solvers
# ---------------------------------------------------------------------------


def _beta_small_angle(r1, r2, r3):
    """Shear phase from the first-order expansion, restricted to [-pi/2, pi/2]."""
    w = r1 - 1.0
    num = np.dot(r3, w)
    den = np.dot(r2, w)
    if den == 0.0:
        if num == 0.0:
            return 0.0
        return math.copysign(0.5 * math.pi, num)
    return math.atan(num / den)


def _restricted_gamma_exact(r1, cj):
    """Exact minimizing gamma of the pair objective with the phase fixed.

    Returns None when the 2x2 hyperbolic minimization is degenerate.
    """
    Rt = np.empty((2, 2))
    Rt[0, 0] = np.dot(r1, r1)
    Rt[0, 1] = Rt[1, 0] = np.dot(r1, cj)
    Rt[1, 1] = np.dot(cj, cj)
    rt = np.array([np.sum(r1), np.sum(cj)])
    res = _hyperbolic_min(Rt, rt, np.array([1.0, -1.0]))
    if res is None:
        return None
    u = res[0]
    return 0.5 * math.asinh(u[1])


def shear_linear(row_p, row_q, p=0, q=1):
    """Shear parameters from the small-angle closed forms.

    The phase comes from the first-order stationarity ratio; the magnitude is
    ``gamma = arctanh(N/D) / 2``.  The small-angle model is only trusted
    where it is a descent step (D > 0) with |N/D| < 1; outside that regime
    (possible on adversarial blocks since the expansion is local) the
    magnitude is recomputed by the exact phase-restricted minimization and
    the step flagged, falling back to a clamped ratio with |gamma| capped at
    1.0 if even that degenerates.
    """
    r1, r2, r3 = _pair_stats(row_p, row_q)
    beta = _beta_small_angle(r1, r2, r3)
    cb, sb = math.cos(beta), math.sin(beta)
    cj = cb * r2 + sb * r3
    num = float(np.dot(cj, 1.0 - r1))
    den = float(np.dot(r1, r1) - np.sum(r1) + np.dot(cj, cj))
    clamped = False
    if num == 0.0:
        gamma = 0.0
    elif den > 0.0 and abs(num) < den:
        gamma = 0.5 * math.atanh(num / den)
        if abs(gamma) > GAMMA_MAX:
            gamma = math.copysign(GAMMA_MAX, gamma)
            clamped = True
    else:
        clamped = True
        gamma = _restricted_gamma_exact(r1, cj)
        if gamma is None:
            ratio = math.copysign(1.0 - 1e-9, num) if den == 0.0 else num / den
            if abs(ratio) >= 1.0:
                ratio = math.copysign(1.0 - 1e-9, ratio)
            gamma = 0.5 * math.atanh(ratio)
            if abs(gamma) > GAMMA_MAX:
                gamma = math.copysign(GAMMA_MAX, gamma)
    ch = math.cosh(gamma)
    sh = complex(cb, sb) * math.sinh(gamma)
    return ShearParams(p=p, q=q, ch=ch, sh=sh, method="linear", clamped=clamped)


def _resolvent_coeffs(values, ab):
    """Ascending coefficients of prod((x + l_i)^2) - sum_i ab_i *
    prod_{j != i}((x + l_j)^2)."""
    full = np.array([1.0])
    for lam in values:
        full = npoly.polymul(full, [lam, 1.0])
    poly = npoly.polymul(full, full)
    n = len(values)
    for i in range(n):
        base = np.array([1.0])
        for j in range(n):
            if j != i:
                base = npoly.polymul(base, [values[j], 1.0])
        poly = npoly.polysub(poly, ab[i] * npoly.polymul(base, base))
    return poly


def _complete_on_hyperboloid(u_p, Nv, Jd, g0):
    """Minimum-norm completions u_p + Nv @ c satisfying u^T J u = 1.

    All completions of a consistent stationary family share the same
    objective value, so the choice only fixes the reported angles; ties are
    broken toward beta = 0 (largest second component, then third).
    """
    G = Nv.T @ (Jd[:, None] * Nv)
    h = Nv.T @ (Jd * u_p)
    k = 1.0 - g0
    cands = []
    if np.linalg.norm(h) <= 1e-12 * (1.0 + abs(g0)):
        if abs(k) <= 1e-12 * (1.0 + abs(g0)):
            cands.append(u_p.copy())
        if G.shape[1] == 1:
            d = G[0, 0]
            if d * k > 0.0:
                step = math.sqrt(k / d)
                cands.append(u_p + step * Nv[:, 0])
                cands.append(u_p - step * Nv[:, 0])
        else:
            wG, VG = _jacobi_sym_small(G)
            for i in range(len(wG)):
                if wG[i] * k > 0.0:
                    step = math.sqrt(k / wG[i])
                    direction = Nv @ VG[:, i]
                    cands.append(u_p + step * direction)
                    cands.append(u_p - step * direction)
    else:
        # quadratic in a single step length along each null direction
        for i in range(Nv.shape[1]):
            a = G[i, i]
            b = 2.0 * h[i]
            cc = g0 - 1.0
            if abs(a) <= 1e-14 * (1.0 + abs(b)):
                if b != 0.0:
                    cands.append(u_p + (-cc / b) * Nv[:, i])
                continue
            disc = b * b - 4.0 * a * cc
            if disc < 0.0:
                continue
            rt = math.sqrt(disc)
            for sgn in (1.0, -1.0):
                step = (-b + sgn * rt) / (2.0 * a)
                cands.append(u_p + step * Nv[:, i])
    # prefer completions closest to the particular solution, then the
    # beta = 0 convention
    cands.sort(
        key=lambda u: (
            round(float(np.linalg.norm(u - u_p)), 9),
            -u[1],
            -(u[2] if len(u) > 2 else 0.0),
        )
    )
    return cands


def _root_candidates(R, r, Jd, lam, n):
    """Stationary vectors for one resolvent root: plain solve when the shift
    is well conditioned, otherwise nullspace completion then perturbation."""
    S = R + lam * np.diag(Jd)
    w, V = _jacobi_sym_small(S)
    aw = np.abs(w)
    wmax = max(float(np.max(aw)), 1e-300)
    out = []
    if float(np.min(aw)) > wmax / 1e12:
        out.append((V @ ((V.T @ r) / w), False))
        return out
    null_mask = aw <= wmax * 1e-10
    rng_mask = ~null_mask
    rp = V.T @ r
    consistent = np.all(np.abs(rp[null_mask]) <= 1e-8 * (1.0 + np.linalg.norm(r)))
    if consistent and np.any(null_mask):
        u_p = V[:, rng_mask] @ (rp[rng_mask] / w[rng_mask])
        g0 = float(u_p @ (Jd * u_p))
        for u in _complete_on_hyperboloid(u_p, V[:, null_mask], Jd, g0):
            out.append((u, True))
    if not out:
        for sgn in (1.0, -1.0):
            lam_p = lam + sgn * 1e-9 * (1.0 + abs(lam))
            Sp = R + lam_p * np.diag(Jd)
            wp, Vp = _jacobi_sym_small(Sp)
            awp = np.abs(wp)
            if float(np.min(awp)) > max(float(np.max(awp)), 1e-300) / 1e12:
                out.append((Vp @ ((Vp.T @ r) / wp), True))
    return out


def _hyperbolic_min(R, r, Jd):
    """Minimize u @ R @ u - 2 r @ u subject to u^T J u = 1, u[0] >= 1.

    Returns (u, lam, poly_residual, constraint_residual, objective,
    degenerate) for the best admissible stationary point, or None when the
    pencil is degenerate or no admissible root exists.  The returned u is
    rescaled to satisfy the constraint exactly.
    """
    n = len(r)
    J = np.diag(Jd)
    try:
        pair = gen_eig(R, J)
    except DegeneratePencilError:
        return None
    a = r @ pair.vectors
    b = np.linalg.solve(pair.vectors, Jd * r)
    poly = _resolvent_coeffs(pair.values, a * b)
    try:
        roots = real_roots(poly)
    except Exception:
        return None
    scale = float(np.max(np.abs(poly)))
    best = None
    for lam in roots:
        for u_raw, degen in _root_candidates(R, r, Jd, float(lam), n):
            quad = float(u_raw @ (Jd * u_raw))
            resid = abs(quad - 1.0)
            if resid > 1e-6 or quad <= 0.0:
                continue
            u = u_raw / math.sqrt(quad)
            if u[0] < 1.0 - 1e-9:
                continue
            F = float(u @ R @ u - 2.0 * (r @ u))
            if best is None or F < best[4]:
                d = len(poly) - 1
                presid = abs(_poly_eval(poly, float(lam))) / (
                    scale * max(1.0, abs(float(lam))) ** d
                )
                best = (u, float(lam), presid, resid, F, degen)
    if best is None:
        return None
    # identity guard: never return a step worse than no rotation at all
    F_id = float(R[0, 0] - 2.0 * r[0])
    if F_id < best[4]:
        u0 = np.zeros(n)
        u0[0] = 1.0
        return (u0, None, None, None, F_id, False)
    return best


def _poly_eval(c, x):
    acc = 0.0
    for k in range(len(c) - 1, -1, -1):
        acc = acc * x + float(c[k])
    return acc


def shear_semi_exact(row_p, row_q, p=0, q=1):
    """Shear with small-angle phase and exact constrained magnitude.

    The phase fixes the 2-vector statistics; the magnitude solves the
    hyperbola-constrained quadratic through its degree-4 resolvent.  When no
    admissible root exists the small-angle solver is used instead (flagged),
    guarded against increasing the pair objective.
    """
    r1, r2, r3 = _pair_stats(row_p, row_q)
    beta = _beta_small_angle(r1, r2, r3)
    cb, sb = math.cos(beta), math.sin(beta)
    cj = cb * r2 + sb * r3
    Rt = np.empty((2, 2))
    Rt[0, 0] = np.dot(r1, r1)
    Rt[0, 1] = Rt[1, 0] = np.dot(r1, cj)
    Rt[1, 1] = np.dot(cj, cj)
    rt = np.array([np.sum(r1), np.sum(cj)])
    res = _hyperbolic_min(Rt, rt, np.array([1.0, -1.0]))
    if res is None:
        # fall back to the small-angle step, but never accept one that is
        # worse than no rotation at all in the restricted objective
        lin = shear_linear(row_p, row_q, p=p, q=q)
        gamma = math.asinh((lin.sh * complex(cb, -sb)).real)
        u_lin = np.array([math.cosh(2.0 * gamma), math.sinh(2.0 * gamma)])
        k_lin = float(u_lin @ Rt @ u_lin - 2.0 * (rt @ u_lin))
        k_id = float(Rt[0, 0] - 2.0 * rt[0])
        if k_id < k_lin:
            return ShearParams(
                p=p, q=q, ch=1.0, sh=0.0 + 0.0j, method="semi",
                fallback_from="semi", objective=k_id,
            )
        lin.fallback_from = "semi"
        lin.objective = k_lin
        return lin
    u, lam, presid, cresid, K, degen = res
    hpp = math.sqrt(0.5 * (u[0] + 1.0))
    sh = complex(cb, sb) * (u[1] / (2.0 * hpp))
    return ShearParams(
        p=p,
        q=q,
        ch=hpp,
        sh=sh,
        method="semi",
        degenerate=degen,
        lam=lam,
        poly_residual=presid,
        constraint_residual=cresid,
        objective=K,
    )


def shear_exact(row_p, row_q, p=0, q=1):
    """Shear from the full constrained minimization on the hyperboloid.

    Builds the 3x3 statistics (R, r), solves the degree-6 resolvent of the
    multiplier equation, evaluates every admissible stationary vector and
    keeps the objective minimizer.  Falls back to the semi-exact solver
    (flagged) on a degenerate pencil or when no admissible root survives.
    """
    r1, r2, r3 = _pair_stats(row_p, row_q)
    R = np.empty((3, 3))
    R[0, 0] = np.dot(r1, r1)
    R[0, 1] = R[1, 0] = np.dot(r1, r2)
    R[0, 2] = R[2, 0] = np.dot(r1, r3)
    R[1, 1] = np.dot(r2, r2)
    R[1, 2] = R[2, 1] = np.dot(r2, r3)
    R[2, 2] = np.dot(r3, r3)
    r = np.array([np.sum(r1), np.sum(r2), np.sum(r3)])
    res = _hyperbolic_min(R, r, np.array([1.0, -1.0, -1.0]))
    if res is None:
        params = shear_semi_exact(row_p, row_q, p=p, q=q)
        params.fallback_from = "exact"
        return params
    u, lam, presid, cresid, F, degen = res
    hpp = math.sqrt(0.5 * (u[0] + 1.0))
    sh = (u[1] + 1j * u[2]) / (2.0 * hpp)
    return ShearParams(
        p=p,
        q=q,
        ch=hpp,
        sh=sh,
        method="exact",
        degenerate=degen,
        lam=lam,
        poly_residual=presid,
        constraint_residual=cresid,
        objective=F,
    )


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def norm_param(row):
    """Optimal positive rescaling sqrt(sum|y|^2 / sum|y|^4) for one row.

    A zero row returns 1.0 (identity).
    """
    row = np.asarray(row, dtype=complex)
    p2 = row.real**2 + row.imag**2
    s2 = float(np.sum(p2))
    s4 = float(np.dot(p2, p2))
    if s4 == 0.0:
        return 1.0
    return math.sqrt(s2 / s4)


def make_norm(block, rows):
    """NormParams for the given rows of a block, flagging zero rows."""
    lams = []
    degen = []
    for i in rows:
        row = np.asarray(block[i], dtype=complex)
        p2 = row.real**2 + row.imag**2
        s4 = float(np.dot(p2, p2))
        if s4 == 0.0:
            lams.append(1.0)
            degen.append(True)
        else:
            lams.append(math.sqrt(float(np.sum(p2)) / s4))
            degen.append(False)
    return NormParams(rows=tuple(rows), lams=tuple(lams), degenerate=tuple(degen))


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def apply_two_row(params, block):
    """Apply a plane rotation or shear to rows (p, q) of a block, in place."""
    p, q = params.p, params.q
    if not (0 <= p < q < block.shape[0]):
        raise IndexError(f"row pair ({p}, {q}) out of range for {block.shape[0]} rows")
    bp = block[p].copy()
    bq = block[q]
    if isinstance(params, GivensParams):
        block[p] = params.c * bp + params.s * bq
        block[q] = -np.conj(params.s) * bp + params.c * bq
    elif isinstance(params, ShearParams):
        block[p] = params.ch * bp + params.sh * bq
        block[q] = np.conj(params.sh) * bp + params.ch * bq
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")


def apply_norm(params, block):
    """Scale the designated rows of a block in place."""
    for i, lam in zip(params.rows, params.lams):
        block[i] *= lam
