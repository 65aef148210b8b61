"""Continuous-time LTI state-space models.

A model is the quadruple ``(A, B, C, D)`` of

    dx/dt = A x + B u
        y = C x + D u

together with the derived quantities used throughout the package: the
strictly proper impulse response ``g(t) = C exp(A t) B``, the transfer
function, Markov parameters, and exact sampled-data simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.signal import lfilter

from .errors import DomainError, NumericError, PoleError

__all__ = [
    "StateSpaceModel", "Trajectory", "impulse_response_g",
    "matrix_exponential", "is_stable", "is_minimal", "simulate_zoh",
    "simulate_foh", "transfer_eval", "markov_parameters",
    "similarity_transform", "STABILITY_MARGIN",
]

#: Absolute threshold on the spectral abscissa below which A counts as Hurwitz.
STABILITY_MARGIN = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """State-space quadruple with validated dimensions.

    Parameters
    ----------
    A, B, C, D : array_like
        System matrices of shapes ``(n, n)``, ``(n, m)``, ``(p, n)`` and
        ``(p, m)``.  ``n = 0`` (a pure feedthrough) is allowed; pass empty
        arrays with explicit shapes, e.g. ``np.zeros((0, 2))`` for ``B``.
    label : str, optional
        Free-form name carried into reports and model files.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    label: str | None = None

    def __post_init__(self):
        A, B, C, D = (_frozen(M) for M in (self.A, self.B, self.C, self.D))
        for name, M in zip("ABCD", (A, B, C, D)):
            if M.ndim != 2:
                raise DomainError(f"{name} must be a 2-D matrix, got shape {M.shape}")
            if not np.all(np.isfinite(M)):
                raise DomainError(f"{name} has non-finite entries")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DomainError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != n:
            raise DomainError(f"B has {B.shape[0]} rows but A is {n}x{n}")
        if C.shape[1] != n:
            raise DomainError(f"C has {C.shape[1]} columns but A is {n}x{n}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DomainError(
                f"D must be {C.shape[0]}x{B.shape[1]}, got shape {D.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_square(self) -> bool:
        return self.m == self.p

    def require_square(self):
        if not self.is_square:
            raise DomainError(
                f"operation needs a square system, got m={self.m}, p={self.p}")

    def with_D(self, D) -> "StateSpaceModel":
        return StateSpaceModel(self.A, self.B, self.C, D, self.label)

    def __repr__(self):
        label = f" {self.label!r}" if self.label else ""
        return f"<StateSpaceModel{label} n={self.n} m={self.m} p={self.p}>"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled state, input and output of a simulation run."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        for name in ("times", "states", "inputs", "outputs"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        k = len(self.times)
        if not (len(self.states) == len(self.inputs) == len(self.outputs) == k):
            raise DomainError("trajectory sequences must have equal lengths")
        if k > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("trajectory times must be strictly increasing")


def matrix_exponential(M):
    """Matrix exponential by scaling and squaring.

    Thin wrapper over :func:`scipy.linalg.expm` (Pade approximant with
    scaling and squaring) that rejects non-finite input.  Accepts a stack
    of matrices with shape ``(..., n, n)``.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix exponential of a matrix with non-finite entries")
    if M.shape[-1] == 0:
        return np.zeros(M.shape)
    return scipy.linalg.expm(M)


def impulse_response_g(sys: StateSpaceModel, t: float) -> np.ndarray:
    """Strictly proper impulse response ``C exp(A t) B`` at ``t >= 0``."""
    if t < 0:
        raise DomainError(f"impulse response needs t >= 0, got {t}")
    if sys.n == 0:
        return np.zeros((sys.p, sys.m))
    if t == 0:
        return sys.C @ sys.B
    return sys.C @ matrix_exponential(sys.A * t) @ sys.B


def _g_many(sys, ts):
    """``g`` at every entry of ``ts``; returns shape ``(len(ts), p, m)``."""
    ts = np.asarray(ts, dtype=float)
    if sys.n == 0:
        return np.zeros((len(ts), sys.p, sys.m))
    E = matrix_exponential(sys.A[None, :, :] * ts[:, None, None])
    return sys.C @ E @ sys.B


def is_stable(sys: StateSpaceModel) -> tuple[bool, float]:
    """Return ``(hurwitz, spectral_abscissa)``.

    A counts as Hurwitz when its spectral abscissa is below
    ``-STABILITY_MARGIN``.  A system with no states has abscissa ``-inf``.
    """
    if sys.n == 0:
        return True, -np.inf
    try:
        eigs = np.linalg.eigvals(sys.A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    alpha = float(np.max(eigs.real))
    return alpha < -STABILITY_MARGIN, alpha


def _numerical_rank(M, tol):
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def controllability_matrix(A, B):
    blocks, AkB = [], B
    for _ in range(A.shape[0]):
        blocks.append(AkB)
        AkB = A @ AkB
    return np.hstack(blocks) if blocks else np.zeros((0, 0))


def is_minimal(sys: StateSpaceModel, tol: float = 1e-8,
               method: str = "kalman") -> tuple[bool, bool]:
    """Return ``(controllable, observable)``.

    ``method="kalman"`` takes the SVD rank of the Kalman matrices, counting
    singular values below ``tol * sigma_max`` as zero.  Powers of ``A``
    make that matrix ill-conditioned when modes are spread out, so
    ``method="pbh"`` offers the eigenvalue test instead: ``(A, B)`` is
    controllable iff ``[lam I - A, B]`` has full row rank at every
    eigenvalue ``lam``, judged relative to ``||[A, B]||``.
    """
    if tol <= 0:
        raise DomainError("rank tolerance must be positive")
    n = sys.n
    if n == 0:
        return True, True
    if method == "kalman":
        ctrb = controllability_matrix(sys.A, sys.B)
        obsv = controllability_matrix(sys.A.T, sys.C.T)
        return _numerical_rank(ctrb, tol) == n, _numerical_rank(obsv, tol) == n
    if method == "pbh":
        return _pbh(sys.A, sys.B, tol), _pbh(sys.A.T, sys.C.T, tol)
    raise DomainError(f"method must be 'kalman' or 'pbh', got {method!r}")


def _pbh(A, B, tol):
    n = A.shape[0]
    scale = np.linalg.norm(np.hstack([A, B]), 2)
    if scale == 0:
        return False
    for lam in np.linalg.eigvals(A):
        M = np.hstack([lam * np.eye(n) - A, B.astype(complex)])
        if np.linalg.svd(M, compute_uv=False)[n - 1] <= tol * scale:
            return False
    return True


def transfer_eval(sys: StateSpaceModel, s: complex) -> np.ndarray:
    """Evaluate ``H(s) = C (sI - A)^{-1} B + D``."""
    if sys.n == 0:
        return sys.D.astype(complex)
    eigs = np.linalg.eigvals(sys.A)
    dist = np.abs(eigs - s)
    k = int(np.argmin(dist))
    if dist[k] <= 1e-12 * (1.0 + abs(s)):
        raise PoleError(s, complex(eigs[k]))
    try:
        X = np.linalg.solve(s * np.eye(sys.n) - sys.A, sys.B.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise PoleError(s, complex(eigs[k])) from exc
    return sys.C @ X + sys.D


def markov_parameters(sys: StateSpaceModel, count: int) -> list[np.ndarray]:
    """``[CB, CAB, ..., CA^{count-1}B]``."""
    if count < 1:
        raise DomainError("count must be at least 1")
    out, CAk = [], sys.C
    for _ in range(count):
        out.append(CAk @ sys.B)
        CAk = CAk @ sys.A
    return out


def similarity_transform(sys: StateSpaceModel, S) -> StateSpaceModel:
    """Change of state coordinates ``x_new = S x``."""
    S = np.asarray(S, dtype=float)
    Sinv = np.linalg.inv(S)
    return StateSpaceModel(S @ sys.A @ Sinv, S @ sys.B, sys.C @ Sinv,
                           sys.D, sys.label)


# -- simulation ---------------------------------------------------------------

def _zoh_matrices(A, B, dt):
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = matrix_exponential(M * dt)
    return E[:n, :n], E[:n, n:]


def _foh_matrices(A, B, dt):
    n, m = B.shape
    M = np.zeros((n + 2 * m, n + 2 * m))
    M[:n, :n] = A
    M[:n, n:n + m] = B
    M[n:n + m, n + m:] = np.eye(m)
    E = matrix_exponential(M * dt)
    Phi, E12, E13 = E[:n, :n], E[:n, n:n + m], E[:n, n + m:]
    return Phi, E12 - E13 / dt, E13 / dt


def _recurrence(Phi, drive, x0):
    """States of ``x[k+1] = Phi x[k] + drive[k]``, ``x[0] = x0``."""
    steps, n = drive.shape
    X = np.empty((steps + 1, n))
    X[0] = x0
    if n == 0:
        return X
    if steps > 256:
        mu, V = np.linalg.eig(Phi)
        if np.linalg.cond(V) < 1e6:
            z0 = np.linalg.solve(V, x0.astype(complex))
            r = np.linalg.solve(V, drive.T.astype(complex))
            Z = np.empty((n, steps + 1), dtype=complex)
            Z[:, 0] = z0
            k = np.arange(1, steps + 1)
            for i in range(n):
                Z[i, 1:] = lfilter([1.0], [1.0, -mu[i]], r[i]) + mu[i] ** k * z0[i]
            X[:] = (V @ Z).real.T
            return X
    for k in range(steps):
        X[k + 1] = Phi @ X[k] + drive[k]
    return X


def _prepare(sys, input_samples, dt, x0):
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    U = np.asarray(input_samples, dtype=float)
    if U.ndim == 1 and sys.m == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] != sys.m:
        raise DomainError(f"inputs must have shape (K, {sys.m}), got {U.shape}")
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise DomainError(f"x0 must have shape ({sys.n},), got {x0.shape}")
    return U, x0


def _trajectory(sys, U, X, dt, t0):
    times = t0 + dt * np.arange(len(U))
    Y = X @ sys.C.T + U @ sys.D.T
    return Trajectory(times, X, U, Y)


def simulate_zoh(sys: StateSpaceModel, input_samples, dt: float,
                 x0=None, t0: float = 0.0) -> Trajectory:
    """Exact zero-order-hold simulation.

    ``input_samples[k]`` is held constant on ``[t_k, t_{k+1})``.  The
    discretization comes from the exponential of the augmented matrix
    ``[[A, B], [0, 0]] * dt`` so there is no integration error.
    """
    U, x0 = _prepare(sys, input_samples, dt, x0)
    Phi, Gam = _zoh_matrices(sys.A, sys.B, dt)
    X = _recurrence(Phi, U[:-1] @ Gam.T, x0)
    return _trajectory(sys, U, X, dt, t0)


def simulate_foh(sys: StateSpaceModel, input_samples, dt: float,
                 x0=None, t0: float = 0.0) -> Trajectory:
    """Exact first-order-hold simulation.

    The input is the piecewise-linear interpolant of ``input_samples``;
    the state update is exact for that signal.
    """
    U, x0 = _prepare(sys, input_samples, dt, x0)
    Phi, G0, G1 = _foh_matrices(sys.A, sys.B, dt)
    X = _recurrence(Phi, U[:-1] @ G0.T + U[1:] @ G1.T, x0)
    return _trajectory(sys, U, X, dt, t0)
