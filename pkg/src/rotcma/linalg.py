"""Small fixed-size numerical kernels.

Everything here operates on 2x2 / 3x3 real-symmetric or small Hermitian
matrices and on real polynomials of degree <= 6.  The kernels are
self-contained (Jacobi sweeps, derivative-based root isolation) so that no
general nonsymmetric eigen machinery is needed anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidInputError",
    "DegeneratePencilError",
    "SingularShiftError",
    "GenEigPair",
    "J2",
    "J3",
    "eig_sym3",
    "eigh_jacobi",
    "real_roots",
    "gen_eig",
    "solve_shifted",
]


class InvalidInputError(ValueError):
    """Raised when an input violates a kernel's preconditions."""


class DegeneratePencilError(ArithmeticError):
    """Raised when a matrix pencil has complex or defective eigenstructure."""


class SingularShiftError(ArithmeticError):
    """Raised when a shifted system is singular or numerically unusable."""


# Signature matrices of the hyperbolic constraints u^T J u = 1.
J2 = np.diag([1.0, -1.0])
J3 = np.diag([1.0, -1.0, -1.0])


# ---------------------------------------------------------------------------
# Symmetric / Hermitian eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------


def _jacobi_sym_small(A, tol=1e-14, max_sweeps=60):
    """Cyclic Jacobi for an n x n real symmetric matrix, n in {2, 3}.

    Returns (eigenvalues ascending, eigenvector columns).  Runs on plain
    Python floats; the matrices here are tiny and this is a hot kernel.
    """
    n = A.shape[0]
    a = [[float(A[i, j]) for j in range(n)] for i in range(n)]
    # symmetrize defensively; callers construct symmetric input
    for i in range(n):
        for j in range(i + 1, n):
            m = 0.5 * (a[i][j] + a[j][i])
            a[i][j] = m
            a[j][i] = m
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = math.sqrt(sum(a[i][j] * a[i][j] for i in range(n) for j in range(n)))
    thresh = tol * max(1.0, scale)
    for _ in range(max_sweeps):
        off = math.sqrt(
            sum(2.0 * a[i][j] * a[i][j] for i in range(n) for j in range(i + 1, n))
        )
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q][q] - a[p][p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p][p], a[q][q]
                a[p][p] = app - t * apq
                a[q][q] = aqq + t * apq
                a[p][q] = 0.0
                a[q][p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip, aiq = a[i][p], a[i][q]
                        a[i][p] = c * aip - s * aiq
                        a[p][i] = a[i][p]
                        a[i][q] = s * aip + c * aiq
                        a[q][i] = a[i][q]
                for i in range(n):
                    vip, viq = v[i][p], v[i][q]
                    v[i][p] = c * vip - s * viq
                    v[i][q] = s * vip + c * viq
    w = [a[i][i] for i in range(n)]
    order = sorted(range(n), key=lambda i: w[i])
    wout = np.array([w[i] for i in order])
    vout = np.array([[v[i][order[j]] for j in range(n)] for i in range(n)])
    return wout, vout


def eig_sym3(T):
    """Eigendecomposition of a 3x3 real symmetric matrix.

    Parameters
    ----------
    T : (3, 3) array_like, real symmetric.

    Returns
    -------
    w : (3,) ndarray, eigenvalues in ascending order.
    V : (3, 3) ndarray, orthonormal eigenvectors as columns, T V = V diag(w).
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (3, 3):
        raise InvalidInputError(f"expected a 3x3 matrix, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise InvalidInputError("matrix has non-finite entries")
    return _jacobi_sym_small(T)


def eigh_jacobi(H, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Intended for the small (N <= ~8) sample covariances handled by the
    whitening stage.  Returns (eigenvalues ascending, unitary U with
    eigenvector columns) such that H U = U diag(w).
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    if H.shape != (n, n):
        raise InvalidInputError("matrix must be square")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("matrix has non-finite entries")
    A = 0.5 * (H + H.conj().T)
    Q = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.abs(A - np.diag(np.diag(A))) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                phase = apq / abs(apq)
                tau = (A[p, p].real - A[q, q].real) / (2.0 * abs(apq))
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # rows p, q of the accumulated transform: G A G^H zeroes A[p,q]
                rp = c * A[p, :] + s * phase * A[q, :]
                rq = -s * np.conj(phase) * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rp, rq
                cp = c * A[:, p] + s * np.conj(phase) * A[:, q]
                cq = -s * phase * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = cp, cq
                gp = c * Q[p, :] + s * phase * Q[q, :]
                gq = -s * np.conj(phase) * Q[p, :] + c * Q[q, :]
                Q[p, :], Q[q, :] = gp, gq
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], Q.conj().T[:, order]


# ---------------------------------------------------------------------------
# Real roots of low-degree polynomials
# ---------------------------------------------------------------------------

# Multiple roots closer than this are reported once.
_ROOT_CLUSTER_TOL = 1e-7


def _horner(c, x):
    acc = 0.0
    for k in range(len(c) - 1, -1, -1):
        acc = acc * x + c[k]
    return acc


def _residual_scale(c, x):
    d = len(c) - 1
    return max(abs(v) for v in c) * max(1.0, abs(x)) ** d


def _bisect_root(c, lo, hi, flo, fhi):
    """Refine a bracketed sign change by bisection plus a Newton polish."""
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = _horner(c, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
    x = 0.5 * (lo + hi)
    dc = [c[k] * k for k in range(1, len(c))]
    for _ in range(3):
        fx = _horner(c, x)
        dfx = _horner(dc, x)
        if dfx == 0.0:
            break
        step = fx / dfx
        xn = x - step
        if not (lo - 1e-9 <= xn <= hi + 1e-9):
            break
        x = xn
    return x


def _roots_monotonic_intervals(c):
    """All real roots of polynomial c (ascending coeffs), via recursion on c'."""
    d = len(c) - 1
    if d == 1:
        return [-c[0] / c[1]]
    deriv = [c[k] * k for k in range(1, len(c))]
    crits = sorted(_roots_monotonic_intervals(deriv))
    bound = 1.0 + max(abs(v) for v in c[:-1]) / abs(c[-1])
    knots = [-bound]
    for x in crits:
        if -bound < x < bound:
            knots.append(x)
    knots.append(bound)
    vals = [_horner(c, x) for x in knots]
    roots = []
    for i in range(len(knots) - 1):
        lo, hi = knots[i], knots[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        # p is monotone on (lo, hi): at most one sign-change root
        if flo == 0.0:
            roots.append(lo)
        if (flo < 0.0) != (fhi < 0.0) and flo != 0.0 and fhi != 0.0:
            roots.append(_bisect_root(c, lo, hi, flo, fhi))
    if vals[-1] == 0.0:
        roots.append(knots[-1])
    # even-multiplicity roots sit at critical points where p itself vanishes
    for x in crits:
        if abs(_horner(c, x)) <= 1e-8 * _residual_scale(c, x):
            roots.append(x)
    return roots


def real_roots(coeffs):
    """Real roots of a real polynomial, multiplicities collapsed.

    Parameters
    ----------
    coeffs : array_like
        Coefficients in ascending order: ``coeffs[k]`` multiplies ``x**k``.
        Degree (after stripping zero leading terms) must be in [1, 6].

    Returns
    -------
    ndarray of distinct real roots in ascending order.  Every returned x
    satisfies ``|p(x)| <= 1e-8 * max|c| * max(1, |x|)**d``.
    """
    c = [float(v) for v in np.atleast_1d(np.asarray(coeffs, dtype=float))]
    if not all(math.isfinite(v) for v in c):
        raise InvalidInputError("polynomial has non-finite coefficients")
    while c and c[-1] == 0.0:
        c.pop()
    if not c:
        raise InvalidInputError("all-zero polynomial")
    d = len(c) - 1
    if d < 1:
        raise InvalidInputError("polynomial is a nonzero constant")
    if d > 6:
        raise InvalidInputError(f"degree {d} exceeds the supported maximum 6")
    raw = sorted(_roots_monotonic_intervals(c))
    out = []
    for x in raw:
        if out and abs(x - out[-1]) <= _ROOT_CLUSTER_TOL:
            continue
        out.append(x)
    return np.array(out)


# ---------------------------------------------------------------------------
# Generalized eigendecomposition against a signature matrix
# ---------------------------------------------------------------------------


@dataclass
class GenEigPair:
    """Real generalized eigendecomposition of (R, J): R = J U diag(values) U^-1."""

    values: np.ndarray  # (n,) real, descending
    vectors: np.ndarray  # (n, n) columns


def _nullspace_small(A, rank_tol):
    """Orthonormal nullspace basis of a small square matrix via full-pivot
    Gaussian elimination."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    cols = list(range(n))
    pivots = []
    for k in range(n):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= rank_tol:
            break
        i += k
        j += k
        A[[k, i], :] = A[[i, k], :]
        A[:, [k, j]] = A[:, [j, k]]
        cols[k], cols[j] = cols[j], cols[k]
        pivots.append(k)
        A[k + 1 :, :] -= np.outer(A[k + 1 :, k] / A[k, k], A[k, :])
    r = len(pivots)
    if r == n:
        return np.zeros((n, 0))
    basis = []
    for free in range(r, n):
        x = np.zeros(n)
        x[free] = 1.0
        for k in range(r - 1, -1, -1):
            x[k] = -np.dot(A[k, k + 1 :], x[k + 1 :]) / A[k, k]
        y = np.zeros(n)
        for idx, col in enumerate(cols):
            y[col] = x[idx]
        basis.append(y)
    B = np.array(basis).T
    # modified Gram-Schmidt
    for j in range(B.shape[1]):
        for i in range(j):
            B[:, j] -= np.dot(B[:, i], B[:, j]) * B[:, i]
        nrm = np.linalg.norm(B[:, j])
        if nrm <= rank_tol:
            raise DegeneratePencilError("degenerate nullspace basis")
        B[:, j] /= nrm
    return B


def _char_roots(M):
    """Real eigenvalues (with multiplicity) of a small real matrix, or raise
    DegeneratePencilError when a complex pair is present."""
    n = M.shape[0]
    s = max(1.0, float(np.max(np.abs(M))))
    A = M / s
    if n == 2:
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        disc = tr * tr - 4.0 * det
        tol = 1e-12 * max(1.0, tr * tr, 4.0 * abs(det))
        if disc < -tol:
            raise DegeneratePencilError("complex generalized eigenvalues")
        rt = math.sqrt(max(disc, 0.0))
        lams = [s * 0.5 * (tr + rt), s * 0.5 * (tr - rt)]
    elif n == 3:
        tr = A[0, 0] + A[1, 1] + A[2, 2]
        c2 = (
            A[0, 0] * A[1, 1]
            - A[0, 1] * A[1, 0]
            + A[0, 0] * A[2, 2]
            - A[0, 2] * A[2, 0]
            + A[1, 1] * A[2, 2]
            - A[1, 2] * A[2, 1]
        )
        det = (
            A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])
        )
        # p(x) = x^3 - tr x^2 + c2 x - det; pick the best-conditioned real
        # root, deflate, and let the quadratic discriminant decide the rest.
        roots = real_roots([-det, c2, -tr, 1.0])
        if roots.size == 0:
            raise DegeneratePencilError("cubic with no located real root")
        r1 = max(roots, key=lambda x: abs(3 * x * x - 2 * tr * x + c2))
        b1 = r1 - tr
        b0 = c2 + r1 * b1
        disc = b1 * b1 - 4.0 * b0
        tol = 1e-10 * max(1.0, b1 * b1, 4.0 * abs(b0))
        if disc < -tol:
            raise DegeneratePencilError("complex generalized eigenvalues")
        rt = math.sqrt(max(disc, 0.0))
        lams = [s * r1, s * 0.5 * (-b1 + rt), s * 0.5 * (-b1 - rt)]
    else:
        raise InvalidInputError("only 2x2 and 3x3 pencils are supported")
    return sorted(lams, reverse=True)


def gen_eig(R, J):
    """Generalized eigendecomposition of the pair (R, J), J a signature matrix.

    Solves R u = lambda J u, i.e. the eigenproblem of J R (J^-1 = J).  The
    pair must admit a full set of real eigenvalues with independent
    eigenvectors; otherwise DegeneratePencilError is raised and the caller
    falls back to a cheaper rotation solver.

    Returns
    -------
    GenEigPair with ``R @ U == J @ U @ diag(values)`` to 1e-10 relative.
    """
    R = np.asarray(R, dtype=float)
    J = np.asarray(J, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n) or J.shape != (n, n):
        raise InvalidInputError("dimension mismatch between R and J")
    if not np.all(np.isfinite(R)):
        raise InvalidInputError("matrix has non-finite entries")
    M = J @ R
    lams = _char_roots(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    # group numerically equal eigenvalues
    groups = []
    for lam in lams:
        if groups and abs(lam - groups[-1][0]) <= 1e-7 * max(1.0, abs(groups[-1][0])):
            groups[-1][1] += 1
        else:
            groups.append([lam, 1])
    values = []
    columns = []
    for lam, mult in groups:
        basis = _nullspace_small(M - lam * np.eye(n), rank_tol=1e-9 * scale)
        if basis.shape[1] < mult:
            raise DegeneratePencilError("defective pencil (eigenvector shortage)")
        for k in range(mult):
            values.append(lam)
            columns.append(basis[:, k])
    U = np.array(columns).T
    values = np.array(values)
    if abs(np.linalg.det(U)) < 1e-10:
        raise DegeneratePencilError("eigenvector matrix is numerically singular")
    resid = np.linalg.norm(R @ U - J @ U @ np.diag(values))
    if resid > 1e-10 * (1.0 + np.linalg.norm(R)) * max(1.0, np.max(np.abs(values))):
        raise DegeneratePencilError("eigendecomposition residual too large")
    return GenEigPair(values=values, vectors=U)


def solve_shifted(R, J, lam, r, cond_limit=1e12):
    """Solve (R + lam*J) u = r for a signature shift of a small symmetric R.

    Raises SingularShiftError when the shifted matrix has condition estimate
    above ``cond_limit``.
    """
    R = np.asarray(R, dtype=float)
    J = np.asarray(J, dtype=float)
    r = np.asarray(r, dtype=float)
    S = R + lam * J
    w, V = _jacobi_sym_small(S)
    aw = np.abs(w)
    wmax = float(np.max(aw))
    if wmax == 0.0 or float(np.min(aw)) <= wmax / cond_limit:
        raise SingularShiftError(f"shift lambda={lam!r} is numerically singular")
    u = V @ ((V.T @ r) / w)
    resid = np.linalg.norm(S @ u - r)
    if resid > 1e-10 * (1.0 + np.linalg.norm(r) + wmax * np.linalg.norm(u)):
        raise SingularShiftError("shifted solve failed the residual check")
    return u
