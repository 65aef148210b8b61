"""Intrinsic storage ``V(u) = <u, Gamma u> / 2`` and dissipation traces.

Here ``u`` is the time-reversed past input: ``u_t(tau) = u_bar(t - tau)``.
For a relaxation system ``V`` is nonnegative and along any trajectory
``dV/dt <= u(t)^T y(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonUnique
from .hankel import HankelDiscretization, QuadratureGrid, SampledSignal, apply_hankel, l2_inner
from .model import (StateSpaceModel, Trajectory, _foh_matrices, _zoh_matrices, simulate_foh,
                    simulate_zoh)

__all__ = [
    "StorageTrace", "storage_value", "past_window", "held_storage", "storage_trace",
    "gradient_check", "derivative_system",
]


def storage_value(hd: HankelDiscretization, u: SampledSignal) -> float:
    """``<u, Gamma u> / 2`` on the discretization's grid."""
    return 0.5 * l2_inner(u, apply_hankel(hd, u))


def _resample(times, inputs, s, kind):
    """Recorded input at instants ``s`` (any shape), zero before ``times[0]``."""
    flat = s.ravel()
    if kind == "linear":
        vals = np.stack([np.interp(flat, times, inputs[:, c]) for c in range(inputs.shape[1])],
                        axis=-1)
    elif kind == "previous":
        idx = np.clip(np.searchsorted(times, flat, side="right") - 1, 0, len(times) - 1)
        vals = inputs[idx]
    else:
        raise DomainError(f"unknown interpolation kind {kind!r}")
    vals = np.where((flat < times[0])[:, None], 0.0, vals)
    return vals.reshape(s.shape + (inputs.shape[1],))


def past_window(traj: Trajectory, t: float, grid: QuadratureGrid,
                kind: str = "linear") -> SampledSignal:
    """Past input seen from instant ``t`` sampled on ``grid``.

    ``u_t(tau_i)`` is the recorded input at ``t - tau_i``, interpolated
    linearly (``kind="linear"``) or held from the previous sample
    (``kind="previous"``), and zero before the recording starts.
    """
    times = traj.times
    if not times[0] <= t <= times[-1]:
        raise DomainError(f"t={t} outside the trajectory span [{times[0]}, {times[-1]}]")
    return SampledSignal(grid, _resample(times, traj.inputs, t - grid.nodes, kind))


@dataclass(frozen=True, eq=False)
class StorageTrace:
    """Storage and supplied power along a trajectory.

    ``supply`` is ``u^T y`` at the sample times and ``work[k]`` the energy
    supplied over step ``k``, integrated exactly for the held input.
    ``residuals[k]`` is ``(V[k+1] - V[k] - work[k]) / dt``, the mean of
    ``dV/dt - u^T y`` over the step, so it has one entry fewer than
    ``times`` and is nonpositive up to the storage quadrature error.  ``state_storage`` is ``x^T T x / 2`` when a valid ``T``
    certificate exists, else ``None``.
    """

    times: np.ndarray
    storage: np.ndarray
    supply: np.ndarray
    work: np.ndarray
    state_storage: np.ndarray | None
    residuals: np.ndarray
    hold: str
    burn_in: float
    evaluation: str = "quadrature"

    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    def tolerance(self, rel: float = 1e-6) -> float:
        """``rel * (1 + max |supply|)``."""
        return rel * (1.0 + (float(np.max(np.abs(self.supply))) if len(self.supply) else 0.0))


def _storage_batch(hd, times, inputs, t_eval, kind):
    """Storage at every ``t_eval`` whose history covers the whole grid."""
    out = np.empty(len(t_eval))
    w = hd.grid.weights
    for lo in range(0, len(t_eval), 512):
        chunk = t_eval[lo:lo + 512]
        U = _resample(times, inputs, chunk[:, None] - hd.grid.nodes[None, :], kind)
        b = np.einsum("j,jnm,kjm->kn", w, hd.right, U)
        c = np.einsum("i,ipn,kip->kn", w, hd.left, U)
        out[lo:lo + 512] = 0.5 * np.einsum("kn,kn->k", c, b)
    return out


def _step_work(sys, traj, dt, hold, points=6):
    """Exact ``int u^T y`` over each sampling step.

    Intrastep states come from the same augmented exponentials as the
    simulation, evaluated at Gauss-Legendre fractions of the step; the
    integrand is analytic inside a step so a few points are exact to
    rounding for any reasonable ``dt``.
    """
    theta, w = np.polynomial.legendre.leggauss(points)
    theta, w = 0.5 * (theta + 1.0), 0.5 * w
    X, U = traj.states[:-1], traj.inputs
    dU = U[1:] - U[:-1]
    work = np.zeros(len(X))
    for th, wq in zip(theta, w):
        h = th * dt
        if hold == "foh":
            Phi, G0, G1 = _foh_matrices(sys.A, sys.B, h)
            x = X @ Phi.T + U[:-1] @ (G0 + G1).T + (h / dt) * (dU @ G1.T)
            u = U[:-1] + th * dU
        else:
            Phi, Gam = _zoh_matrices(sys.A, sys.B, h)
            x = X @ Phi.T + U[:-1] @ Gam.T
            u = U[:-1]
        y = x @ sys.C.T + u @ sys.D.T
        work += wq * np.einsum("km,km->k", u, y)
    return dt * work


def held_storage(sys: StateSpaceModel, traj: Trajectory, dt: float, hold: str) -> np.ndarray:
    """Storage of the held past input, integrated exactly.

    The kernel ``C e^{A(s + tau)} B`` separates, so
    ``<u_t, Gamma u_t> = z(t)^T x(t)`` where ``x`` is the state and ``z``
    the state of the adjoint realization ``(A^T, C^T)`` driven by the same
    input.  No quadrature is involved, which matters for held inputs whose
    past windows jump at every sample.
    """
    adjoint = StateSpaceModel(sys.A.T, sys.C.T, sys.B.T, sys.D.T)
    sim = simulate_foh if hold == "foh" else simulate_zoh
    Z = sim(adjoint, traj.inputs, dt, t0=traj.times[0]).states
    return 0.5 * np.einsum("ki,ki->k", Z, traj.states)


def storage_trace(sys: StateSpaceModel, hd: HankelDiscretization, input_samples,
                  dt: float, burn_in: float | None = None, hold: str = "foh",
                  tol: float = 1e-8, evaluation: str = "quadrature") -> StorageTrace:
    """Simulate from zero state and evaluate storage after ``burn_in``.

    ``hold="foh"`` treats the samples as a piecewise-linear input and
    resamples past windows linearly, ``hold="zoh"`` holds each sample
    and resamples with the previous value; in both cases the windowed
    input is the one the simulation actually saw.  ``burn_in`` defaults to
    the grid horizon, past which the truncated history is exact up to the
    grid's truncation level.  For instants with shorter history the grid
    is truncated to the recorded span, so no zero-extension jump falls
    inside a quadrature panel.

    ``evaluation="exact"`` replaces the quadrature by :func:`held_storage`;
    burn-in then defaults to zero since nothing is truncated.  The
    residual uses the exactly integrated supplied work of each step, so
    in exact arithmetic it equals minus the mean dissipation rate.
    """
    if evaluation not in ("quadrature", "exact"):
        raise DomainError(f"evaluation must be 'quadrature' or 'exact', got {evaluation!r}")
    if hold == "foh":
        traj, kind = simulate_foh(sys, input_samples, dt), "linear"
    elif hold == "zoh":
        traj, kind = simulate_zoh(sys, input_samples, dt), "previous"
    else:
        raise DomainError(f"hold must be 'foh' or 'zoh', got {hold!r}")
    if burn_in is None:
        burn_in = hd.grid.horizon if evaluation == "quadrature" else 0.0
    if burn_in < 0:
        raise DomainError("burn_in must be nonnegative")
    sel = traj.times >= traj.times[0] + burn_in - 1e-12 * dt
    if not np.any(sel):
        raise DomainError("trajectory is shorter than the burn-in")
    times = traj.times[sel]
    elapsed = times - traj.times[0]
    V = np.empty(len(times))
    full = elapsed >= hd.grid.horizon
    if evaluation == "exact":
        V = held_storage(sys, traj, dt, hold)[sel]
    elif np.any(full):
        V[full] = _storage_batch(hd, traj.times, traj.inputs, times[full], kind)
    for k in np.flatnonzero(~full) if evaluation == "quadrature" else ():
        if elapsed[k] <= 0:
            V[k] = 0.0
            continue
        sub = hd.truncated(elapsed[k])
        V[k] = storage_value(sub, past_window(traj, times[k], sub.grid, kind))
    supply = np.einsum("km,km->k", traj.inputs[sel], traj.outputs[sel])
    work = _step_work(sys, traj, dt, hold)[sel[:-1]][:len(times) - 1]
    residuals = (np.diff(V) - work) / dt

    state_storage = None
    if sys.n:
        from .passivity import solve_T
        try:
            cert = solve_T(sys, tol)
        except NonUnique:
            cert = None
        if cert is not None and cert.residuals_ok(tol):
            X = traj.states[sel]
            state_storage = 0.5 * np.einsum("ki,ij,kj->k", X, cert.T, X)
    else:
        state_storage = np.zeros(len(times))
    return StorageTrace(times, V, supply, work, state_storage, residuals, hold, float(burn_in),
                        evaluation)


def gradient_check(hd: HankelDiscretization, u: SampledSignal, directions,
                   eps: float = 1e-3) -> float:
    """Worst relative mismatch between a central difference of ``V`` and
    ``<Gamma u, phi>`` over ``directions``.

    Each entry is ``|dV - <Gamma u, phi>| / (1 + |<Gamma u, phi>|)`` with
    ``dV = (V(u + eps phi) - V(u - eps phi)) / (2 eps)``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    gu = apply_hankel(hd, u)
    worst = 0.0
    for phi in directions:
        exact = l2_inner(gu, phi)
        fd = (storage_value(hd, u + eps * phi) - storage_value(hd, u - eps * phi)) / (2 * eps)
        worst = max(worst, abs(fd - exact) / (1.0 + abs(exact)))
    return worst


def derivative_system(sys: StateSpaceModel) -> StateSpaceModel:
    """``(A, B, -C A, 0)``, whose impulse response is ``-g'(t)``."""
    label = f"derivative({sys.label})" if sys.label else None
    return StateSpaceModel(sys.A, sys.B, -(sys.C @ sys.A), np.zeros_like(sys.D), label)
