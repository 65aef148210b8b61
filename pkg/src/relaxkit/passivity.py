"""Passivity certificates for reciprocal state-space systems.

The central object is a symmetric ``T`` with ``A^T T = T A`` and
``T B = C^T``.  When ``T >= 0`` and ``T A <= 0`` the quadratic form
``x^T T x / 2`` is a storage function, and ``T`` itself satisfies the
passivity LMI

    [[A^T Q + Q A, Q B - C^T], [B^T Q - C, -D - D^T]] <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonUnique
from .model import StateSpaceModel, is_minimal

__all__ = [
    "TCertificate", "solve_T", "lemma_passivity_check", "lmi_matrix",
    "lmi_residual", "signature_inertia",
]


def _sym(X):
    return 0.5 * (X + X.T)


def _eig_range(X):
    if X.size == 0:
        return 0.0, 0.0
    w = np.linalg.eigvalsh(_sym(X))
    return float(w[0]), float(w[-1])


@dataclass(frozen=True, eq=False)
class TCertificate:
    """A candidate ``T`` with its defining residuals and sign information.

    ``residual_sylvester`` and ``residual_output`` are spectral norms of
    ``A^T T - T A`` and ``T B - C^T``.  ``minimal`` records whether the
    system was minimal when ``T`` was solved for (uniqueness of ``T`` is
    only guaranteed in that case).
    """

    T: np.ndarray
    residual_sylvester: float
    residual_output: float
    symmetry_defect: float
    min_eig_T: float
    min_eig_TA_negated: float
    scale: float
    minimal: bool = True

    @classmethod
    def from_matrix(cls, sys: StateSpaceModel, T, minimal: bool | None = None):
        """Evaluate the certificate conditions for a given ``T``."""
        T = np.array(T, dtype=float)
        if T.shape != (sys.n, sys.n):
            raise DomainError(f"T must be {sys.n}x{sys.n}, got {T.shape}")
        A, B, C = sys.A, sys.B, sys.C
        nrm = lambda X: float(np.linalg.norm(X, 2)) if X.size else 0.0
        Ts = _sym(T)
        if minimal is None:
            minimal = all(is_minimal(sys, method="pbh"))
        scale = 1.0 + max(nrm(T) * nrm(A), nrm(C), nrm(T) * nrm(B))
        return cls(
            T=T,
            residual_sylvester=nrm(A.T @ T - T @ A),
            residual_output=nrm(T @ B - C.T),
            symmetry_defect=nrm(T - T.T),
            min_eig_T=_eig_range(Ts)[0],
            min_eig_TA_negated=_eig_range(-(Ts @ A))[0],
            scale=scale,
            minimal=bool(minimal),
        )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.T, 2)) if self.T.size else 0.0

    def residuals_ok(self, tol: float = 1e-8) -> bool:
        """Defining equations hold to ``tol`` relative to the problem scale."""
        return (max(self.residual_sylvester, self.residual_output) <= tol * self.scale
                and self.symmetry_defect <= tol * (1.0 + self.norm))

    def valid(self, tol: float = 1e-8) -> bool:
        """Residuals small, ``T >= -tol`` and ``T A <= tol`` (relative)."""
        s = tol * (1.0 + self.norm)
        return (self.residuals_ok(tol) and self.min_eig_T >= -s
                and self.min_eig_TA_negated >= -tol * self.scale)


def _sym_basis(n):
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    basis = np.zeros((len(idx), n, n))
    for k, (i, j) in enumerate(idx):
        basis[k, i, j] = basis[k, j, i] = 1.0
    return basis


def solve_T(sys: StateSpaceModel, tol: float = 1e-8) -> TCertificate:
    """Least-squares symmetric solution of ``A^T T = T A``, ``T B = C^T``.

    The unknowns are the ``n(n+1)/2`` entries of a symmetric ``T``.  A
    numerically rank-deficient stacked system raises :class:`NonUnique`
    with the nullity.  Rank uses the usual floating-point threshold
    (largest singular value times size times machine epsilon) on the
    column-equilibrated system; ``tol`` is kept for the caller's
    validity checks because ``T`` inherits the squared condition number
    of the state coordinates and a ``tol``-relative rank cut would
    reject well-posed but skewed coordinates.
    The returned certificate may still be invalid: for a non-reciprocal
    system the equations are inconsistent and the residuals show it.
    """
    sys.require_square()
    n = sys.n
    if n == 0:
        return TCertificate.from_matrix(sys, np.zeros((0, 0)), minimal=True)
    A, B, C = sys.A, sys.B, sys.C
    basis = _sym_basis(n)
    # column k of the design matrix is the equation residual for basis[k]
    sylv = np.einsum("ij,kil->kjl", A, basis) - basis @ A
    outp = basis @ B
    design = np.concatenate([sylv.reshape(len(basis), -1),
                             outp.reshape(len(basis), -1)], axis=1).T
    rhs = np.concatenate([np.zeros(n * n), C.T.ravel()])
    col = np.linalg.norm(design, axis=0)
    col[col == 0] = 1.0
    coef, _, rank, _ = np.linalg.lstsq(design / col, rhs, rcond=None)
    nullity = len(basis) - rank
    if nullity > 0:
        raise NonUnique(nullity)
    T = np.einsum("k,kij->ij", coef / col, basis)
    return TCertificate.from_matrix(sys, T, minimal=all(is_minimal(sys, method="pbh")))


def lemma_passivity_check(sys: StateSpaceModel, cert: TCertificate,
                          tol: float = 1e-8) -> bool:
    """Passivity from a certificate: ``D = D^T >= 0``, ``T >= 0``, ``TA <= 0``.

    Raises :class:`DomainError` when the certificate's defining equations
    do not hold to ``tol``.
    """
    if not cert.residuals_ok(tol):
        raise DomainError(
            "certificate residuals exceed tolerance "
            f"(sylvester {cert.residual_sylvester:.3g}, output {cert.residual_output:.3g})")
    D = sys.D
    dscale = 1.0 + (float(np.max(np.abs(D))) if D.size else 0.0)
    d_sym = float(np.max(np.abs(D - D.T))) if D.size else 0.0
    d_min = _eig_range(D)[0]
    t_ok = cert.min_eig_T >= -tol * (1.0 + cert.norm)
    ta_ok = cert.min_eig_TA_negated >= -tol * cert.scale
    return d_sym <= tol * dscale and d_min >= -tol * dscale and t_ok and ta_ok


def lmi_matrix(sys: StateSpaceModel, Q) -> np.ndarray:
    """The passivity LMI block matrix for a symmetric ``Q``."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (sys.n, sys.n):
        raise DomainError(f"Q must be {sys.n}x{sys.n}, got {Q.shape}")
    qs = 1.0 + (float(np.max(np.abs(Q))) if Q.size else 0.0)
    if Q.size and float(np.max(np.abs(Q - Q.T))) > 1e-8 * qs:
        raise DomainError("Q is not symmetric")
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    return np.block([[A.T @ Q + Q @ A, Q @ B - C.T],
                     [B.T @ Q - C, -D - D.T]])


def lmi_residual(sys: StateSpaceModel, Q) -> float:
    """Largest eigenvalue of the LMI matrix; ``<= tol * scale`` certifies passivity."""
    return _eig_range(lmi_matrix(sys, Q))[1]


def signature_inertia(cert: TCertificate, tol: float = 1e-8) -> tuple[int, int, int]:
    """``(n_pos, n_neg, n_zero)`` of ``T`` with threshold ``tol * ||T||``."""
    if cert.T.size == 0:
        return (0, 0, 0)
    w = np.linalg.eigvalsh(_sym(cert.T))
    thr = tol * cert.norm
    return (int(np.sum(w > thr)), int(np.sum(w < -thr)),
            int(np.sum(np.abs(w) <= thr)))
