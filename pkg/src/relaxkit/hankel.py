"""Quadrature discretization of the Hankel operator and its certificates.

For a stable square system the Hankel operator acts on time-reversed past
inputs ``u(tau) = u_past(-tau)`` as

    (Gamma u)(t) = int_0^inf g(t + tau) u(tau) dtau,   g(t) = C exp(At) B.

The feedthrough ``D`` never enters the kernel: its delta contribution pairs
to zero in ``L2``.  On a Gauss-Legendre panel grid with weights ``w`` the
operator becomes the matrix ``M = W^(1/2) K W^(1/2)`` with blocks
``K[i][j] = g(t_i + t_j)``, so self-adjointness of the operator is
symmetry of ``M`` and positivity is ``M + M^T >= 0``.

The kernel factors as ``g(t + tau) = [C exp(At)] [exp(A tau) B]``; the
factors are stored and used for applying the operator, and for the
low-rank eigenvalue computations behind the certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .errors import DomainError, UnstableForHankel
from .model import StateSpaceModel, is_stable, matrix_exponential

__all__ = [
    "QuadratureGrid", "SampledSignal", "HankelDiscretization",
    "PositivityCertificate", "CycleReport", "NumericalRange",
    "build_grid", "discretize_hankel", "apply_hankel", "l2_inner",
    "adjointness_defect", "adjointness_witness", "positivity_certificate",
    "cycle_sum", "n_cyclic_test", "numerical_range_arg", "cyclic_order_bound",
    "TRUNCATION_EPS",
]

TRUNCATION_EPS = 1e-10


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on ``[0, horizon]``.

    ``self_test_error`` is the relative error of the rule on
    ``int_0^horizon exp(-decay_rate t) dt`` measured at construction.
    """

    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    order: int
    horizon: float
    decay_rate: float
    self_test_error: float

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def compatible(self, other: "QuadratureGrid") -> bool:
        return self is other or (
            len(self.nodes) == len(other.nodes)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights))

    def truncated(self, length: float) -> "QuadratureGrid":
        """The same rule restricted to ``[0, length]``.

        Panels entirely inside are kept; the panel containing ``length``
        is replaced by a Gauss-Legendre panel ending exactly there.
        """
        if length >= self.horizon:
            return self
        if length <= 0:
            raise DomainError("truncation length must be positive")
        p = int(np.searchsorted(self.edges, length, side="right")) - 1
        keep = p * self.order
        x, w = leggauss(self.order)
        a = self.edges[p]
        nodes = np.concatenate([self.nodes[:keep], a + 0.5 * (length - a) * (x + 1)])
        weights = np.concatenate([self.weights[:keep], 0.5 * (length - a) * w])
        edges = np.append(self.edges[:p + 1], length)
        return _make_grid(nodes, weights, edges, self.order, length, self.decay_rate)


def _make_grid(nodes, weights, edges, order, horizon, rate):
    exact = -np.expm1(-rate * horizon) / rate
    err = abs(np.dot(weights, np.exp(-rate * nodes)) - exact) / exact
    for a in (nodes, weights, edges):
        a.setflags(write=False)
    return QuadratureGrid(nodes, weights, edges, order, float(horizon),
                          float(rate), float(err))


def build_grid(sys: StateSpaceModel, n_panels: int = 32,
               nodes_per_panel: int = 8) -> QuadratureGrid:
    """Geometric Gauss-Legendre panels on ``[0, T]``.

    ``T = ln(1/TRUNCATION_EPS) / |spectral abscissa|``.  The first panel
    has width ``min(T / n_panels, T / n_panels**2, 1 / spectral_radius)``
    and panel widths grow geometrically, so fast modes and signals that
    vary faster than the slowest mode are resolved near ``t = 0``.
    """
    if n_panels < 1 or nodes_per_panel < 1:
        raise DomainError("panel and node counts must be at least 1")
    stable, alpha = is_stable(sys)
    if not stable:
        raise UnstableForHankel(
            f"Hankel operator needs Hurwitz A (spectral abscissa {alpha:.3g})")
    if sys.n == 0:
        rate, rho = 1.0, 1.0
    else:
        rate = -alpha
        rho = float(np.max(np.abs(np.linalg.eigvals(sys.A))))
    T = np.log(1.0 / TRUNCATION_EPS) / rate
    h0 = min(T / n_panels, T / n_panels ** 2, 1.0 / rho)
    if h0 * n_panels >= T * (1 - 1e-12):
        edges = np.linspace(0.0, T, n_panels + 1)
    else:
        P = n_panels
        hi = (T / h0) ** (1.0 / (P - 1)) + 1.0
        r = brentq(lambda r: h0 * np.expm1(P * np.log(r)) / (r - 1.0) - T,
                   1.0 + 1e-12, hi, xtol=1e-15)
        edges = np.concatenate([[0.0], h0 * np.cumsum(r ** np.arange(P))])
        edges[-1] = T
    x, w = leggauss(nodes_per_panel)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (a + 0.5 * (b - a) * (x + 1)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return _make_grid(nodes, weights, edges, nodes_per_panel, T, rate)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """A vector signal sampled at the nodes of a grid (shape ``(N, m)``)."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.node_count:
            raise DomainError(
                f"signal has {v.shape[0]} samples, grid has {self.grid.node_count}")
        if not np.all(np.isfinite(v)):
            raise DomainError("signal has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(t)`` (vectorized, returning ``(N,)`` or ``(N, m)``)."""
        return cls(grid, fn(grid.nodes))

    @classmethod
    def zeros(cls, grid, m):
        return cls(grid, np.zeros((grid.node_count, m)))

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    def _check(self, other):
        if not self.grid.compatible(other.grid):
            raise DomainError("signals live on different grids")
        if self.values.shape != other.values.shape:
            raise DomainError("signals have different channel counts")

    def __add__(self, other):
        self._check(other)
        return SampledSignal(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledSignal(self.grid, self.values - other.values)

    def __mul__(self, c):
        return SampledSignal(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledSignal(self.grid, -self.values)

    def norm(self) -> float:
        return float(np.sqrt(l2_inner(self, self)))


def l2_inner(u: SampledSignal, y: SampledSignal) -> float:
    """Quadrature inner product ``sum_i w_i u(t_i)^T y(t_i)``."""
    u._check(y)
    return float(np.einsum("i,ij,ij->", u.grid.weights, u.values, y.values))


@dataclass(frozen=True, eq=False)
class HankelDiscretization:
    """Kernel factors of a Hankel operator on a quadrature grid.

    ``left[i] = C exp(A t_i)`` and ``right[i] = exp(A t_i) B`` so that the
    kernel block ``K[i][j] = left[i] @ right[j]``.
    """

    sys: StateSpaceModel
    grid: QuadratureGrid
    left: np.ndarray                  # (N, p, n)
    right: np.ndarray                 # (N, n, m)

    @cached_property
    def kernel(self) -> np.ndarray:
        """Kernel blocks ``g(t_i + t_j)`` as an ``(N, N, p, m)`` array."""
        return np.einsum("ipk,jkm->ijpm", self.left, self.right)

    @cached_property
    def _factors(self):
        sw = np.sqrt(self.grid.weights)
        N, p, n = self.left.shape
        m = self.right.shape[2]
        Pt = (self.left * sw[:, None, None]).reshape(N * p, n)
        Qt = (self.right * sw[:, None, None]).transpose(0, 2, 1).reshape(N * m, n)
        return Pt, Qt

    @cached_property
    def matrix(self) -> np.ndarray:
        """The weight-symmetrized operator matrix ``M`` (``Np x Nm``)."""
        Pt, Qt = self._factors
        return Pt @ Qt.T

    @cached_property
    def norm(self) -> float:
        """Spectral norm of ``M``."""
        Pt, Qt = self._factors
        if Pt.shape[1] == 0:
            return 0.0
        R1 = np.linalg.qr(Pt, mode="r")
        R2 = np.linalg.qr(Qt, mode="r")
        return float(np.linalg.norm(R1 @ R2.T, 2))

    @cached_property
    def _lowrank(self):
        """Orthonormal basis ``Qx`` and ``Rx`` with ``[Pt, Qt] = Qx Rx``."""
        Pt, Qt = self._factors
        return np.linalg.qr(np.hstack([Pt, Qt]))

    def _small(self, skew=False):
        Qx, Rx = self._lowrank
        n = self.left.shape[2]
        J = np.zeros((2 * n, 2 * n))
        J[:n, n:] = 0.5 * np.eye(n)
        J[n:, :n] = -0.5 * np.eye(n) if skew else 0.5 * np.eye(n)
        return Qx, Rx @ J @ Rx.T

    def truncated(self, length: float) -> "HankelDiscretization":
        """Discretization on ``grid.truncated(length)``, reusing kernel factors."""
        grid = self.grid.truncated(length)
        if grid is self.grid:
            return self
        keep = int(np.searchsorted(self.grid.edges, length, side="right") - 1) * grid.order
        left, right = _factor_rows(self.sys, grid.nodes[keep:])
        return HankelDiscretization(
            self.sys, grid,
            np.concatenate([self.left[:keep], left]),
            np.concatenate([self.right[:keep], right]))

    def to_signal(self, v) -> SampledSignal:
        """Signal whose weighted coordinates ``W^(1/2) u`` equal ``v``."""
        m = self.right.shape[2]
        v = np.asarray(v).reshape(self.grid.node_count, m)
        return SampledSignal(self.grid, v / np.sqrt(self.grid.weights)[:, None])

    def weighted(self, u: SampledSignal) -> np.ndarray:
        return (u.values * np.sqrt(self.grid.weights)[:, None]).ravel()


def _factor_rows(sys, ts):
    E = matrix_exponential(sys.A[None] * ts[:, None, None])
    return sys.C @ E, E @ sys.B


def discretize_hankel(sys: StateSpaceModel, grid: QuadratureGrid) -> HankelDiscretization:
    """Assemble the Hankel kernel factors of ``sys`` on ``grid``."""
    sys.require_square()
    stable, alpha = is_stable(sys)
    if not stable:
        raise UnstableForHankel(
            f"Hankel operator needs Hurwitz A (spectral abscissa {alpha:.3g})")
    left, right = _factor_rows(sys, grid.nodes)
    for a in (left, right):
        a.setflags(write=False)
    return HankelDiscretization(sys, grid, left, right)


def apply_hankel(hd: HankelDiscretization, u: SampledSignal) -> SampledSignal:
    """``y(t_i) = sum_j w_j K[i][j] u(t_j)``."""
    if not hd.grid.compatible(u.grid):
        raise DomainError("signal grid does not match the discretization")
    if u.channels != hd.right.shape[2]:
        raise DomainError(f"signal has {u.channels} channels, system has {hd.right.shape[2]} inputs")
    state = np.einsum("j,jnm,jm->n", hd.grid.weights, hd.right, u.values)
    return SampledSignal(hd.grid, hd.left @ state)


def adjointness_defect(hd: HankelDiscretization, u: SampledSignal,
                       w: SampledSignal) -> float:
    """``|<Gw, u> - <w, Gu>| / (1 + |<w, Gu>|)``."""
    lhs = l2_inner(apply_hankel(hd, w), u)
    rhs = l2_inner(w, apply_hankel(hd, u))
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def adjointness_witness(hd: HankelDiscretization):
    """Signals ``(u, w)`` that maximize the skew pairing ``<Gw,u> - <w,Gu>``.

    They are the top singular pair of the skew part of ``M``, scaled so
    the skew pairing equals one.  For a self-adjoint operator the pairing
    vanishes and unit-norm signals are returned.
    """
    Qx, S = hd._small(skew=True)
    U, sv, Vt = np.linalg.svd(S)
    s = 1.0 / np.sqrt(sv[0]) if sv[0] > 1e-300 else 1.0
    return hd.to_signal(Qx @ U[:, 0] * s), hd.to_signal(Qx @ Vt[0] * s)


class PositivityCertificate(NamedTuple):
    min_eig: float
    symmetry_defect: float
    norm: float

    def certified(self, tol: float = 1e-8) -> bool:
        return self.min_eig >= -tol * self.norm and self.symmetry_defect <= tol


def positivity_certificate(hd: HankelDiscretization) -> PositivityCertificate:
    """Minimum eigenvalue of ``(M + M^T)/2`` and ``||M - M^T||_F / ||M||_F``.

    The eigenvalues come from the rank ``<= 2n`` factorization
    ``(M + M^T)/2 = Qx (Rx J Rx^T) Qx^T``; the remaining eigenvalues of
    the full matrix are zero.
    """
    M = hd.matrix
    fro = float(np.linalg.norm(M))
    defect = float(np.linalg.norm(M - M.T)) / fro if fro > 0 else 0.0
    _, S = hd._small()
    eigs = np.linalg.eigvalsh(S) if S.size else np.zeros(1)
    lo = float(eigs[0])
    if M.shape[0] > S.shape[0]:
        lo = min(lo, 0.0)
    return PositivityCertificate(lo, defect, hd.norm)


def cycle_sum(hd: HankelDiscretization, signals) -> float:
    """``<y_0, u_0 - u_1> + <y_1, u_1 - u_2> + ... + <y_n, u_n - u_0>``."""
    if len(signals) < 2:
        raise DomainError("a cycle needs at least two signals")
    ys = [apply_hankel(hd, u) for u in signals]
    k = len(signals)
    return sum(l2_inner(ys[i], signals[i] - signals[(i + 1) % k]) for i in range(k))


@dataclass(frozen=True)
class CycleReport:
    """Worst cycle sums per cycle order ``n`` (cycles of ``n + 1`` signals).

    ``worst_normalized[n]`` divides each sum by
    ``||M|| * sum_i ||u_i||^2`` before taking the minimum.
    """

    worst_sums: dict
    worst_normalized: dict
    norm: float
    trials: int
    seed: int

    def passed(self, tol: float = 1e-8) -> bool:
        return all(v >= -tol for v in self.worst_normalized.values())


def _structured_cycles(hd, n, rng):
    Qx, S_sym = hd._small()
    _, S_skew = hd._small(skew=True)
    cycles = []
    if S_sym.size == 0:
        return cycles
    w, V = np.linalg.eigh(S_sym)
    for col in (0, -1):
        v = Qx @ V[:, col]
        cycles.append([v if i % 2 == 0 else -v for i in range(n + 1)])
        cycles.append([v] + [np.zeros_like(v)] * n)
    U, sv, Vt = np.linalg.svd(S_skew)
    planes = [(Qx @ U[:, 0], Qx @ Vt[0]), (Qx @ V[:, 0], Qx @ V[:, -1])]
    for x, y in planes:
        for sign in (1.0, -1.0):
            ang = sign * 2 * np.pi * np.arange(n + 1) / (n + 1)
            cycles.append([np.cos(a) * x + np.sin(a) * y for a in ang])
    # one random point set visited in a few cyclic orders
    base = [Qx @ rng.standard_normal(Qx.shape[1]) for _ in range(n + 1)]
    for _ in range(3):
        cycles.append([base[i] for i in rng.permutation(n + 1)])
    return cycles


def n_cyclic_test(hd: HankelDiscretization, n_max: int = 6, trials: int = 20,
                  seed: int = 0) -> CycleReport:
    """Empirical n-cyclic monotonicity for ``n = 1 .. n_max``.

    Each order is probed with ``trials`` seeded random cycles (drawn mostly
    from the range of ``M``) plus structured cycles: sign flips and
    point-zero pairs along extreme eigenvectors of the symmetric part,
    rotations in the dominant skew plane, and permuted visiting orders.
    ``n = 1`` is plain monotonicity.
    """
    if n_max < 1 or trials < 1:
        raise DomainError("n_max and trials must be at least 1")
    rng = np.random.default_rng(seed)
    Qx, _ = hd._lowrank
    dim = hd.grid.node_count * hd.right.shape[2]
    norm = hd.norm
    worst, worst_n = {}, {}
    for n in range(1, n_max + 1):
        cycles = _structured_cycles(hd, n, rng)
        for _ in range(trials):
            cycles.append([Qx @ rng.standard_normal(Qx.shape[1])
                           + 0.1 * rng.standard_normal(dim) / np.sqrt(dim)
                           for _ in range(n + 1)])
        lo, lo_n = np.inf, np.inf
        for vs in cycles:
            signals = [hd.to_signal(v) for v in vs]
            total = cycle_sum(hd, signals)
            energy = sum(float(np.dot(v, v)) for v in vs)
            normalized = total / (norm * energy) if norm * energy > 0 else 0.0
            lo = min(lo, total)
            lo_n = min(lo_n, normalized)
        worst[n], worst_n[n] = float(lo), float(lo_n)
    return CycleReport(worst, worst_n, norm, trials, seed)


class NumericalRange(NamedTuple):
    max_abs_arg: float
    vacuous: bool
    informative: int


def numerical_range_arg(hd: HankelDiscretization, samples: int = 200,
                        seed: int = 0, rel_floor: float = 1e-8) -> NumericalRange:
    """Largest ``|arg z^H M z|`` over sampled complex vectors.

    Samples are seeded random complex vectors (mostly in the range of
    ``M``) together with eigenvectors of the Hermitian and skew parts.
    Values with ``|z^H M z| <= rel_floor * ||M|| * ||z||^2`` carry no
    angle information and are skipped; if nothing remains the result is
    ``0`` with ``vacuous=True``.
    """
    if samples < 1:
        raise DomainError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    M = hd.matrix
    norm = hd.norm
    if norm == 0:
        return NumericalRange(0.0, True, 0)
    Qx, S_sym = hd._small()
    _, S_skew = hd._small(skew=True)
    dim = M.shape[1]
    zs = [Qx @ (rng.standard_normal(Qx.shape[1]) + 1j * rng.standard_normal(Qx.shape[1]))
          + 0.1 * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / np.sqrt(dim)
          for _ in range(samples)]
    zs += list((Qx @ np.linalg.eigh(S_sym)[1]).T)
    zs += list((Qx @ np.linalg.eig(S_skew)[1]).T)
    best, used = 0.0, 0
    for z in zs:
        q = np.vdot(z, M @ z)
        if abs(q) <= rel_floor * norm * np.vdot(z, z).real:
            continue
        used += 1
        best = max(best, abs(float(np.angle(q))))
    return NumericalRange(best, used == 0, used)


def cyclic_order_bound(max_abs_arg: float) -> float:
    """Largest cycle order ``n`` compatible with a numerical-range angle.

    With cycles of ``n + 1`` signals a linear operator is n-cyclic
    monotone iff its numerical range lies in ``|arg z| <= pi / (n + 1)``.
    Returns ``inf`` for a zero angle and ``0`` when even monotonicity
    fails.
    """
    if max_abs_arg <= 0:
        return np.inf
    return float(max(int(np.floor(np.pi / max_abs_arg + 1e-12)) - 1, 0))
