"""Dense linear algebra for the small (p <= ~8) matrices used by the tests.

Everything here works on numpy arrays but does the factorizations by hand:
Cholesky for solves, partial-pivot LU for determinants and cyclic Jacobi
for symmetric eigenproblems. The matrices are tiny, so clarity wins over
speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCovariance, SingularScatter

# Relative pivot threshold below which a matrix is treated as singular.
PIVOT_TOL = 1e-12
# Relative eigenvalue threshold for the retained subspace of E.
RANK_TOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenResult:
    """Descending eigenvalues with unit-norm eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def effective_rank(self) -> int:
        return len(self.eigenvalues)


def _square(a) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def mean_and_covariance(rows, ddof: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Column means and covariance of a k x p matrix.

    ``ddof=1`` gives the unbiased (k-1) denominator used by the tests,
    ``ddof=0`` the maximum-likelihood (k) one used by Mardia's statistics.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    k = x.shape[0]
    if k < 2:
        raise ValueError(f"need at least 2 rows, got {k}")
    if ddof not in (0, 1):
        raise ValueError("ddof must be 0 or 1")
    mean = x.mean(axis=0)
    dev = x - mean
    cov = dev.T @ dev / (k - ddof)
    return mean, cov


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L L^T = a.

    Raises SingularCovariance carrying the 0-based pivot index when a pivot
    is not above ``PIVOT_TOL`` times the largest diagonal entry.
    """
    a = _square(a)
    p = a.shape[0]
    scale = max(float(np.max(np.abs(np.diag(a)))), 0.0)
    tol = PIVOT_TOL * scale
    low = np.zeros_like(a)
    for j in range(p):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if not np.isfinite(d) or d <= tol:
            raise SingularCovariance(
                f"matrix is singular or not positive definite (pivot {j})", pivot=j
            )
        low[j, j] = np.sqrt(d)
        for i in range(j + 1, p):
            low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
    return low


def solve_spd(a, b) -> np.ndarray:
    """Solve a x = b for symmetric positive definite a via Cholesky."""
    low = cholesky(a)
    b = np.asarray(b, dtype=float).reshape(-1)
    p = low.shape[0]
    if b.shape[0] != p:
        raise ValueError("dimension mismatch")
    y = np.zeros(p)
    for i in range(p):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    x = np.zeros(p)
    for i in range(p - 1, -1, -1):
        x[i] = (y[i] - low[i + 1 :, i] @ x[i + 1 :]) / low[i, i]
    return x


def determinant(a) -> float:
    """Determinant by Gaussian elimination with partial pivoting."""
    u = _square(a).copy()
    p = u.shape[0]
    det = 1.0
    for j in range(p):
        piv = j + int(np.argmax(np.abs(u[j:, j])))
        if u[piv, j] == 0.0:
            return 0.0
        if piv != j:
            u[[j, piv]] = u[[piv, j]]
            det = -det
        det *= u[j, j]
        u[j + 1 :, j:] -= np.outer(u[j + 1 :, j] / u[j, j], u[j, j:])
    return float(det)


def jacobi_eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with values descending and eigenvectors in
    the columns of ``vectors``. Iterates until every off-diagonal entry is
    below ``JACOBI_TOL`` times the Frobenius norm.
    """
    a = _square(a)
    a = 0.5 * (a + a.T)
    p = a.shape[0]
    v = np.eye(p)
    thresh = JACOBI_TOL * np.linalg.norm(a)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a)))
        if p < 2 or off.max() <= thresh:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if abs(a[i, j]) <= thresh * 1e-3:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(p)
                rot[i, i] = rot[j, j] = c
                rot[i, j] = s
                rot[j, i] = -s
                a = rot.T @ a @ rot
                a[i, j] = a[j, i] = 0.0
                v = v @ rot
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its largest-magnitude entry is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def gen_eig_spd(h, e, max_components: int | None = None, rank_tol: float = RANK_TOL) -> EigenResult:
    """Solve H v = lambda E v on the subspace where E is nondegenerate.

    E is eigendecomposed, directions with eigenvalue at or below
    ``rank_tol`` times the largest are dropped, H is whitened in what
    remains and decomposed there. Vectors are mapped back to the original
    coordinates, normalized to unit length and given the canonical sign.
    Only components with lambda > rank_tol are returned.
    """
    h = _square(h)
    e = _square(e)
    if h.shape != e.shape:
        raise ValueError("H and E must have the same shape")
    evals, evecs = jacobi_eigh(e)
    emax = float(evals[0]) if len(evals) else 0.0
    if not np.isfinite(emax) or emax <= 0.0:
        raise SingularScatter("within-group scatter matrix E is numerically zero")
    keep = evals > rank_tol * emax
    whiten = evecs[:, keep] / np.sqrt(evals[keep])
    c = whiten.T @ h @ whiten
    lam, q = jacobi_eigh(0.5 * (c + c.T))
    limit = len(lam) if max_components is None else max(0, int(max_components))
    vals, vecs = [], []
    for i in range(len(lam)):
        if len(vals) >= limit or lam[i] <= rank_tol:
            break
        w = whiten @ q[:, i]
        vals.append(float(lam[i]))
        vecs.append(canonical_sign(w / np.linalg.norm(w)))
    p = h.shape[0]
    vec_arr = np.array(vecs).T if vecs else np.zeros((p, 0))
    return EigenResult(np.array(vals), vec_arr)


def whitened_product(h, e, rank_tol: float = RANK_TOL) -> np.ndarray:
    """The whitened matrix W^T H W whose trace is the sum of all eigenvalues."""
    evals, evecs = jacobi_eigh(_square(e))
    keep = evals > rank_tol * evals[0]
    whiten = evecs[:, keep] / np.sqrt(evals[keep])
    return whiten.T @ _square(h) @ whiten


def forward_substitute(low, b) -> np.ndarray:
    """Solve low @ x = b for lower-triangular ``low``; ``b`` may be a matrix."""
    low = _square(low)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    for i in range(low.shape[0]):
        x[i] = (b[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x
