"""Dense complex linear algebra: Hermitian matrices, eigendecomposition and
Euclidean projection onto the spectahedron {S >= 0, tr(S) <= 1}.

Matrices are plain ``numpy`` arrays. ``hermitian`` is the single entry point
that validates and symmetrizes; every other function assumes its input went
through it (or is otherwise Hermitian to working precision).
"""

from typing import NamedTuple

import numpy as np

from d2dmam.tolerances import DEFAULT_TOLERANCES, Tolerances


class EigenConvergenceError(RuntimeError):
    """The Jacobi sweep limit was reached before the off-diagonal mass vanished."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(relative off-diagonal norm {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray   # real, ascending
    eigenvectors: np.ndarray  # unitary, column i pairs with eigenvalues[i]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_vector(h) -> np.ndarray:
    v = np.asarray(h, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def hermitian(a, tol: Tolerances = DEFAULT_TOLERANCES, check: bool = False) -> np.ndarray:
    """Return ``(A + A^H)/2`` as a complex array.

    With ``check=True`` a matrix further than ``tol.hermitian`` (relative to
    its largest entry) from Hermitian is rejected instead of silently fixed.
    """
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValueError("matrix dimension must be positive")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if check:
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > tol.hermitian * scale:
            raise ValueError("matrix is not Hermitian")
    return 0.5 * (m + m.conj().T)


def quadratic_form(sigma: np.ndarray, h, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``Re(h^H sigma h)``, with round-off negatives clamped to zero."""
    h = as_vector(h)
    if sigma.shape != (h.size, h.size):
        raise ValueError(f"dimension mismatch: sigma {sigma.shape}, h {h.shape}")
    value = float(np.real(np.vdot(h, sigma @ h)))
    return _clamp(value, float(np.vdot(h, h).real), tol)


def quadratic_forms(sigma: np.ndarray, channels: np.ndarray,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Vectorized ``quadratic_form`` over the rows of ``channels`` (shape K x M)."""
    channels = np.atleast_2d(channels)
    if channels.shape[1] != sigma.shape[0]:
        raise ValueError(f"dimension mismatch: sigma {sigma.shape}, channels {channels.shape}")
    values = np.einsum("km,km->k", channels.conj() @ sigma, channels).real
    if values.min() >= 0:
        return values
    norms = np.einsum("km,km->k", channels.conj(), channels).real
    floor = -tol.quad_clamp * np.maximum(norms, 1.0)
    return np.where((values < 0) & (values >= floor), 0.0, values)


def _clamp(value: float, norm2: float, tol: Tolerances) -> float:
    if value < 0 and value >= -tol.quad_clamp * max(norm2, 1.0):
        return 0.0
    return value


def _offdiag_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(a: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v
    target = tol.eig_offdiag * scale
    off = 0.0
    for sweep in range(tol.eig_max_sweeps):
        off = _offdiag_norm(a)
        if off <= target:
            return np.real(np.diag(a)).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= target * 1e-3:
                    continue
                # phase rotation makes a_pq real, then a real Givens rotation zeroes it
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # columns (p, q) <- (p, q) @ [[c, s], [-s conj(phase), c conj(phase)]]
                pc = phase.conjugate()
                ap, aq = a[:, p].copy(), a[:, q]
                a[:, p] = c * ap - s * pc * aq
                a[:, q] = s * ap + c * pc * aq
                ap, aq = a[p, :].copy(), a[q, :]
                a[p, :] = c * ap - s * phase * aq
                a[q, :] = s * ap + c * phase * aq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp, vq = v[:, p].copy(), v[:, q]
                v[:, p] = c * vp - s * pc * vq
                v[:, q] = s * vp + c * pc * vq
    off = _offdiag_norm(a)
    if off <= target:
        return np.real(np.diag(a)).copy(), v
    raise EigenConvergenceError(off / scale, tol.eig_max_sweeps)


def hermitian_eig(a: np.ndarray, method: str = "jacobi",
                  tol: Tolerances = DEFAULT_TOLERANCES) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` runs the cyclic complex Jacobi iteration implemented
    here; ``method="lapack"`` defers to ``numpy.linalg.eigh`` and is what the
    solver's inner loop uses.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n > tol.eig_max_dim:
        raise ValueError(f"dimension {n} exceeds the configured cap {tol.eig_max_dim}")
    if method == "jacobi":
        w, v = _jacobi(a, tol)
        order = np.argsort(w, kind="stable")
        return EigenDecomposition(w[order], v[:, order])
    if method == "lapack":
        w, v = np.linalg.eigh(a)
        return EigenDecomposition(w, v)
    raise ValueError(f"unknown eigensolver method {method!r}")


def project_capped_simplex(x) -> np.ndarray:
    """Euclidean projection of a real vector onto {x >= 0, sum(x) <= 1}."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    if x.sum() <= 1.0:
        return x
    # sorted-threshold projection onto the unit simplex, in coordinates
    # relative to the largest entry so huge inputs do not cancel
    order = np.argsort(-x, kind="stable")
    d = x[order] - x[order[0]]
    ks = np.arange(1, d.size + 1)
    active = int(np.nonzero(ks * d - np.cumsum(d) + 1.0 > 0)[0][-1]) + 1
    out = np.zeros_like(x)
    top = d[:active]
    out[order[:active]] = np.maximum(1.0 / active + top - top.mean(), 0.0)
    return out


def project_spectahedron(a: np.ndarray, method: str = "jacobi",
                         tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Frobenius-nearest point of {S >= 0, tr(S) <= 1} to the Hermitian ``a``."""
    dec = hermitian_eig(a, method=method, tol=tol)
    lam = project_capped_simplex(dec.eigenvalues)
    v = dec.eigenvectors
    return hermitian((v * lam) @ v.conj().T)
