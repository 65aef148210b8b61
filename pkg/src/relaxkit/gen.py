"""Seeded system generators and a closed-form Hankel inner-product oracle."""

from __future__ import annotations

from math import factorial

import numpy as np

from .classify import ModalForm, symmetric_realization
from .errors import DomainError
from .model import StateSpaceModel

__all__ = [
    "rc_two_port", "random_relaxation", "random_nonrelaxation", "gyrator_like",
    "oracle_inner_product", "NONRELAXATION_KINDS",
]

NONRELAXATION_KINDS = ("complex_pole", "indefinite_residue", "asymmetric")
RATE_RANGE = (0.1, 10.0)


def rc_two_port(R1: float = 1.0, Cap: float = 1.0, R2: float = 1.0) -> StateSpaceModel:
    """Two-port RC network: a capacitor charged through ``R1`` with a
    series ``R2`` on the second port.

    State is the capacitor charge, inputs are port currents and outputs
    port voltages.
    """
    if min(R1, Cap, R2) <= 0:
        raise DomainError("resistances and capacitance must be positive")
    return StateSpaceModel(
        A=np.array([[-1.0 / (R1 * Cap)]]),
        B=np.array([[1.0 / Cap, 1.0 / Cap]]),
        C=np.array([[1.0], [1.0]]),
        D=np.diag([0.0, float(R2)]),
        label=f"rc_two_port(R1={R1!r}, C={Cap!r}, R2={R2!r})",
    )


def _distinct_rates(rng, count):
    lo, hi = np.log(RATE_RANGE[0]), np.log(RATE_RANGE[1])
    while True:
        rates = np.sort(np.exp(rng.uniform(lo, hi, count)))
        if count < 2 or np.min(np.diff(rates) / rates[1:]) > 1e-3:
            return rates


def random_relaxation(seed: int, n_modes: int = 3, m: int = 2, rank_max: int = 1,
                      include_D: bool = False) -> StateSpaceModel:
    """Random relaxation system in internally symmetric coordinates.

    Rates are log-uniform in ``[0.1, 10]``, each residue is ``L L^T`` with
    ``L`` of ``m x r`` and ``r`` uniform in ``1..rank_max``; the feedthrough
    is ``Dt Dt^T`` when ``include_D``.  The state dimension is the sum of
    the residue ranks.
    """
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    if not 1 <= rank_max <= m:
        raise DomainError("rank_max must lie in 1..m")
    rng = np.random.default_rng(seed)
    rates = _distinct_rates(rng, n_modes)
    residues = []
    for _ in range(n_modes):
        r = int(rng.integers(1, rank_max + 1))
        L = rng.standard_normal((m, r))
        residues.append(L @ L.T)
    if include_D:
        Dt = rng.standard_normal((m, m))
        G0 = Dt @ Dt.T
    else:
        G0 = np.zeros((m, m))
    sys = symmetric_realization(ModalForm(G0, rates, tuple(residues)))
    return StateSpaceModel(sys.A, sys.B, sys.C, sys.D,
                           label=f"random_relaxation(seed={seed})")


def gyrator_like(k: float = 4.0) -> StateSpaceModel:
    """Two decoupled unit-rate modes with a skew output coupling ``k``.

    ``g(t) = e^{-t} [[1, k], [-k, 1]]`` so the kernel is not symmetric.
    """
    return StateSpaceModel(
        A=-np.eye(2), B=np.eye(2), C=np.array([[1.0, k], [-k, 1.0]]),
        D=np.zeros((2, 2)), label=f"gyrator_like(k={k!r})")


def random_nonrelaxation(seed: int, kind: str, m: int | None = None) -> StateSpaceModel:
    """Seeded negative controls.

    ``complex_pole``
        A 2x2 rotation block with decay ``a`` in ``[0.2, 2]`` and frequency
        ``w >= a``, with ``C = B^T``.
    ``indefinite_residue``
        One or two real modes; the residue of the fastest mode is symmetric
        indefinite and dominates, so the kernel is symmetric but not positive.
    ``asymmetric``
        ``A = -rate I``, ``B = I`` and ``C`` a symmetric part plus a larger
        skew part, so the kernel is not symmetric.
    """
    rng = np.random.default_rng(seed)
    if kind == "complex_pole":
        m = m or int(rng.integers(1, 4))
        a = rng.uniform(0.2, 2.0)
        w = a * rng.uniform(1.0, 5.0)
        A = np.array([[-a, w], [-w, -a]])
        B = rng.standard_normal((2, m))
        C = B.T.copy()
    elif kind == "indefinite_residue":
        m = m or int(rng.integers(2, 4))
        rates = _distinct_rates(rng, int(rng.integers(1, 3)))
        blocks_B, blocks_C = [], []
        # the indefinite residue goes on the fastest mode: the Markov block
        # Hankel test scales by its largest entry, which the fastest mode owns
        for i in range(len(rates)):
            U, _ = np.linalg.qr(rng.standard_normal((m, m)))
            if i == len(rates) - 1:
                sig = rng.uniform(0.5, 2.0, m)
                sig[0] = -rng.uniform(0.5, 2.0)
            else:
                sig = 0.1 * rng.uniform(0.0, 1.0, m)
            root = np.sqrt(np.abs(sig))
            blocks_B.append(root[:, None] * U.T)
            blocks_C.append(U * (root * np.sign(sig)))
        A = np.diag(np.repeat(-rates, m))
        B = np.vstack(blocks_B)
        C = np.hstack(blocks_C)
    elif kind == "asymmetric":
        m = m or int(rng.integers(2, 4))
        if m < 2:
            raise DomainError("asymmetric family needs m >= 2")
        lam = np.exp(rng.uniform(np.log(0.5), np.log(2.0)))
        Sym = rng.standard_normal((m, m))
        Skew = rng.standard_normal((m, m))
        Skew = Skew - Skew.T
        Skew *= 2.0 * max(np.linalg.norm(Sym + Sym.T, 2), 1.0) / np.linalg.norm(Skew, 2)
        A = -lam * np.eye(m)
        B = np.eye(m)
        C = 0.5 * (Sym + Sym.T) + Skew
    else:
        raise DomainError(f"unknown kind {kind!r}; expected one of {NONRELAXATION_KINDS}")
    return StateSpaceModel(A, B, C, np.zeros((m, m)),
                           label=f"random_nonrelaxation(seed={seed}, kind={kind})")


def _moment_vector(sys, descriptor, left):
    """``int_0^inf (C e^{At})^T u(t) dt`` (left) or ``int e^{At} B v(t) dt``.

    Each term ``(coef, power, rate)`` on channel ``c`` contributes
    ``coef * power! * (rate I - A)^{-(power+1)}`` applied to the channel
    column of ``B`` or row of ``C``.
    """
    n, m = sys.n, sys.m
    if len(descriptor) != m:
        raise DomainError(f"descriptor has {len(descriptor)} channels, system has {m}")
    out = np.zeros(n)
    A = sys.A.T if left else sys.A
    for ch, terms in enumerate(descriptor):
        vec = sys.C[ch] if left else sys.B[:, ch]
        for term in terms:
            try:
                coef, power, rate = term
            except (TypeError, ValueError):
                raise DomainError(f"bad term {term!r}; expected (coef, power, rate)") from None
            if int(power) != power or power < 0:
                raise DomainError(f"power must be a nonnegative integer, got {power!r}")
            if rate <= 0:
                raise DomainError(f"decay rate must be positive, got {rate!r}")
            R = rate * np.eye(n) - A
            x = np.linalg.solve(R, vec)
            for _ in range(int(power)):
                x = np.linalg.solve(R, x)
            out += coef * factorial(int(power)) * x
    return out


def oracle_inner_product(sys: StateSpaceModel, u, v) -> float:
    """Exact ``<u, Gamma v>`` for exponential-polynomial signals.

    A signal descriptor is a list with one entry per channel, each a list
    of ``(coef, power, rate)`` terms meaning ``coef * t**power * exp(-rate t)``.
    Since ``g(t + tau) = C e^{At} e^{A tau} B`` the double integral splits
    into two moment vectors, each a resolvent power
    ``int t^p e^{-rt} e^{At} dt = p! (rI - A)^{-(p+1)}``.  Requires
    ``rate`` plus the spectral abscissa of ``A`` to be positive.
    """
    sys.require_square()
    a = _moment_vector(sys, u, left=True)
    b = _moment_vector(sys, v, left=False)
    return float(a @ b)
