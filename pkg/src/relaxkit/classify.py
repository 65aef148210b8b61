"""Matrix tests for relaxation systems.

Four equivalent finite tests decide whether an LTI system is a relaxation
system (symmetric, completely monotonic impulse response and symmetric
PSD feedthrough):

* a scan of ``(-1)^k d^k/dt^k g(t)`` for complete monotonicity,
* the modal (partial fraction) form with symmetric PSD residues,
* existence of an internally symmetric realization ``A1 = A1^T <= 0``,
  ``B1 = C1^T``,
* the sign of two block-Hankel matrices of Markov parameters.

External reciprocity (``Se H(s)`` symmetric) is checked alongside.
:func:`classify` runs all of them and collects margins in a
:class:`ClassificationReport`.

All margins are signed and normalized so that ``margin >= -tol`` means
the test passes; PSD margins are minimum eigenvalues divided by
``1 + max |entry|`` and defect margins are negated defects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NotModal, PoleError, RelaxkitError
from .model import (StateSpaceModel, is_minimal, is_stable, markov_parameters,
                    matrix_exponential, transfer_eval)

__all__ = [
    "ModalForm", "ClassifyConfig", "TestResult", "ClassificationReport",
    "MarkovHankelResult", "MonotonicityScan", "ReciprocityResult",
    "markov_hankel_test", "modal_decomposition", "symmetric_realization",
    "complete_monotonicity_scan", "reciprocity_check", "classify",
    "default_t_grid", "DEFAULT_SAMPLE_POINTS",
]

DEFAULT_SAMPLE_POINTS = (1.0, 2.0 + 1.0j, 0.37 + 2.9j)


def _sym(X):
    return 0.5 * (X + X.T)


def _min_eig(X):
    if X.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(_sym(X))[0])


def _max_abs(*mats):
    return max((float(np.max(np.abs(M))) for M in mats if M.size), default=0.0)


def _asym(X):
    if X.size == 0:
        return 0.0
    return float(np.max(np.abs(X - X.T)))


# -- Markov-Hankel test -------------------------------------------------------

class MarkovHankelResult(NamedTuple):
    verdict: bool
    margin_even: float
    margin_odd: float
    symmetry_defect: float
    feedthrough_margin: float
    hankel_even: np.ndarray
    hankel_odd: np.ndarray


def _block_hankel(markov, n, shift):
    if n == 0:
        return np.zeros((0, 0))
    return np.block([[markov[i + j + shift] for j in range(n)] for i in range(n)])


def markov_hankel_test(sys: StateSpaceModel, tol: float = 1e-8) -> MarkovHankelResult:
    """Sign test on the block-Hankel matrices of Markov parameters.

    With ``n`` block rows, ``[CA^{i+j}B]`` must be PSD, ``[CA^{i+j+1}B]``
    NSD, and both, together with ``D``, symmetric; ``D`` must be PSD.
    ``margin_even`` is the normalized minimum eigenvalue of the first
    matrix and ``margin_odd`` the negated normalized maximum eigenvalue of
    the second, so both are ``>= -tol`` on success.
    """
    sys.require_square()
    n = sys.n
    if n:
        markov = markov_parameters(sys, 2 * n)
        H0 = _block_hankel(markov, n, 0)
        H1 = _block_hankel(markov, n, 1)
    else:
        H0 = H1 = np.zeros((0, 0))
    scale = 1.0 + _max_abs(H0, H1)
    margin_even = _min_eig(H0) / scale
    margin_odd = _min_eig(-H1) / scale
    sym_defect = max(_asym(H0), _asym(H1)) / scale
    d_scale = 1.0 + _max_abs(sys.D)
    sym_defect = max(sym_defect, _asym(sys.D) / d_scale)
    d_margin = _min_eig(sys.D) / d_scale
    verdict = (d_margin >= -tol and sym_defect <= tol
               and margin_even >= -tol and margin_odd >= -tol)
    return MarkovHankelResult(verdict, margin_even, margin_odd, sym_defect,
                              d_margin, H0, H1)


# -- modal form ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModalForm:
    """Partial fraction form ``H(s) = G0 + sum_i G_i / (s + rate_i)``."""

    G0: np.ndarray
    rates: np.ndarray
    residues: tuple
    hidden_modes: int = 0

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if len(rates) != len(self.residues):
            raise DomainError("rates and residues must align")
        if np.any(np.diff(rates) <= 0):
            raise DomainError("rates must be strictly increasing")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "G0", np.asarray(self.G0, dtype=float))
        object.__setattr__(self, "residues",
                           tuple(np.asarray(G, dtype=float) for G in self.residues))

    @property
    def scale(self) -> float:
        return 1.0 + _max_abs(self.G0, *self.residues)

    @property
    def symmetry_defects(self) -> list[float]:
        return [_asym(G) for G in self.residues]

    @property
    def residue_min_eigs(self) -> list[float]:
        return [_min_eig(G) for G in self.residues]

    @property
    def marginal(self) -> bool:
        """True when a residue sits at rate zero (an integrator)."""
        return bool(len(self.rates)) and abs(self.rates[0]) <= 1e-12

    def transfer(self, s: complex) -> np.ndarray:
        H = self.G0.astype(complex)
        for lam, G in zip(self.rates, self.residues):
            H = H + G / (s + lam)
        return H

    def margin(self, tol: float = 1e-8) -> float:
        """Worst normalized margin over rates, symmetry and PSD-ness."""
        scale = self.scale
        parts = [(_min_eig(self.G0) - _asym(self.G0)) / scale]
        for lam, G in zip(self.rates, self.residues):
            parts += [(_min_eig(G) - _asym(G)) / scale, min(lam, 0.0)]
        return min(parts)


def modal_decomposition(sys: StateSpaceModel, tol: float = 1e-8) -> ModalForm:
    """Modal form of a square system with real, non-defective spectrum.

    Eigenvalues closer than ``tol * (1 + |lambda|)`` are pooled into one
    rate.  Residues are returned as computed; their symmetry and sign are
    recorded in the form, not enforced.

    Raises
    ------
    NotModal
        If A has complex eigenvalues or a defective (or numerically
        defective) eigenstructure.
    """
    sys.require_square()
    n = sys.n
    if n == 0:
        return ModalForm(sys.D, [], ())
    lam, V = np.linalg.eig(sys.A)
    bad = np.abs(lam.imag) > tol * (1.0 + np.abs(lam))
    if np.any(bad):
        z = complex(lam[bad][0])
        raise NotModal(f"complex eigenvalue {z.real:.10g}{z.imag:+.10g}j")
    lam = lam.real
    V = V.real if np.iscomplexobj(V) else V
    if np.linalg.cond(V) > 1e12:
        raise NotModal("eigenvector matrix is numerically singular (defective A)")
    W = np.linalg.inv(V)
    order = np.argsort(-lam)
    lam, V, W = lam[order], V[:, order], W[order, :]

    clusters, start = [], 0
    for i in range(1, n + 1):
        if i == n or abs(lam[i] - lam[start]) > tol * (1.0 + abs(lam[start])):
            clusters.append(list(range(start, i)))
            start = i
    CV, WB = sys.C @ V, W @ sys.B
    rates, residues, hidden = [], [], 0
    for idx in clusters:
        if len(idx) > 1:
            Vc = V[:, idx] / np.linalg.norm(V[:, idx], axis=0)
            if np.linalg.svd(Vc, compute_uv=False)[-1] < 1e-6:
                raise NotModal(
                    f"defective eigenvalue {float(lam[idx[0]]):.10g} of multiplicity {len(idx)}")
        G = CV[:, idx] @ WB[idx, :]
        rates.append(-float(np.mean(lam[idx])))
        residues.append(G)
    biggest = max(float(np.max(np.abs(G))) for G in residues)
    keep = [i for i, G in enumerate(residues)
            if float(np.max(np.abs(G))) > tol * (1.0 + biggest) * 1e-4]
    hidden = len(residues) - len(keep)
    return ModalForm(sys.D, [rates[i] for i in keep],
                     tuple(residues[i] for i in keep), hidden)


def _psd_factor(G, tol, scale):
    """``L`` with ``L L^T = G`` after dropping eigenvalues below ``tol*scale``."""
    w, U = np.linalg.eigh(_sym(G))
    if w.size and w[0] < -tol * scale:
        raise DomainError(f"residue is not PSD: eigenvalue {float(w[0]):.10g}")
    keep = w > tol * scale
    U = U[:, keep]
    # deterministic sign: largest-magnitude entry of each column positive
    pivots = U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])]
    U = U * np.where(pivots < 0, -1.0, 1.0)
    return U * np.sqrt(w[keep])


def symmetric_realization(modal: ModalForm, tol: float = 1e-8) -> StateSpaceModel:
    """Internally symmetric realization of a modal form.

    Each residue ``G_i = L_i L_i^T`` contributes a block
    ``A1 = -rate_i I``, ``C1 = L_i``, ``B1 = L_i^T``.  The result has
    ``A1 = A1^T``, ``B1 = C1^T`` bit for bit, and is minimal.
    """
    scale = modal.scale
    m = modal.G0.shape[0]
    if np.any(modal.rates < -tol):
        raise DomainError(f"negative rate {float(modal.rates[0]):.10g} has no symmetric "
                          "realization with A1 <= 0")
    blocks, diag = [], []
    for lam, G in zip(modal.rates, modal.residues):
        if _asym(G) > tol * scale:
            raise DomainError(f"residue at rate {float(lam):.10g} is not symmetric")
        L = _psd_factor(G, tol, scale)
        blocks.append(L)
        diag += [-lam] * L.shape[1]
    C1 = np.hstack(blocks) if blocks else np.zeros((m, 0))
    A1 = np.diag(np.array(diag, dtype=float))
    return StateSpaceModel(A1, C1.T.copy(), C1, _sym(modal.G0))


# -- complete monotonicity ----------------------------------------------------

class MonotonicityScan(NamedTuple):
    verdict: bool
    worst_margin: float
    worst_location: tuple


def default_t_grid(sys: StateSpaceModel, points: int = 96) -> np.ndarray:
    """Zero plus a geometric grid spanning the system's time scales."""
    if sys.n == 0:
        return np.array([0.0, 1.0])
    eigs = np.linalg.eigvals(sys.A)
    rho = max(float(np.max(np.abs(eigs))), 1e-12)
    slow = float(np.min(np.abs(eigs.real)))
    t_max = 30.0 / slow if slow > 1e-9 else 30.0 / rho
    t_min = 1e-3 / rho
    return np.concatenate([[0.0], np.geomspace(t_min, max(t_max, 10 * t_min), points)])


def complete_monotonicity_scan(sys: StateSpaceModel, t_grid=None, k_max=None,
                               tol: float = 1e-8) -> MonotonicityScan:
    """Check ``(-1)^k C A^k exp(A t) B`` symmetric PSD on a time grid.

    Derivatives are formed exactly as ``C A^k exp(At) B``.  The margin at
    each ``(k, t)`` is the minimum eigenvalue of the symmetric part minus
    the symmetry defect, both normalized by ``1 + max |entry|`` over the
    grid for that ``k``.
    """
    sys.require_square()
    t_grid = default_t_grid(sys) if t_grid is None else np.asarray(t_grid, float)
    if np.any(t_grid < 0):
        raise DomainError("time grid must be nonnegative")
    k_max = max(2, 2 * sys.n) if k_max is None else int(k_max)
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    if sys.n == 0:
        return MonotonicityScan(True, 0.0, (0, float(t_grid[0])))
    EB = matrix_exponential(sys.A[None] * t_grid[:, None, None]) @ sys.B
    worst, where = np.inf, (0, float(t_grid[0]))
    CAk = sys.C
    for k in range(k_max + 1):
        G = (-1) ** k * (CAk @ EB)                  # (T, m, m)
        scale = 1.0 + float(np.max(np.abs(G)))
        sym = 0.5 * (G + G.transpose(0, 2, 1))
        mins = np.linalg.eigvalsh(sym)[:, 0] / scale
        defects = np.max(np.abs(G - G.transpose(0, 2, 1)), axis=(1, 2)) / scale
        margins = mins - defects
        i = int(np.argmin(margins))
        if margins[i] < worst:
            worst, where = float(margins[i]), (k, float(t_grid[i]))
        CAk = CAk @ sys.A
    return MonotonicityScan(worst >= -tol, worst, where)


# -- reciprocity --------------------------------------------------------------

class ReciprocityResult(NamedTuple):
    verdict: bool
    max_defect: float
    relative_defect: float


def reciprocity_check(sys: StateSpaceModel, sigma_e=None, sample_points=None,
                      tol: float = 1e-8) -> ReciprocityResult:
    """Test ``Se H(s) = (Se H(s))^T`` at sample points.

    ``sigma_e`` is a vector (or diagonal matrix) of +-1 entries; identity
    by default.  The verdict compares each defect with
    ``tol * (1 + ||H(s)||)``.
    """
    sys.require_square()
    points = DEFAULT_SAMPLE_POINTS if sample_points is None else sample_points
    sig = np.ones(sys.m) if sigma_e is None else np.asarray(sigma_e, dtype=float)
    if sig.ndim == 2:
        sig = np.diag(sig)
    if sig.shape != (sys.m,) or not np.all(np.abs(sig) == 1):
        raise DomainError("sigma_e must be a +-1 signature of length m")
    worst_abs, worst_rel = 0.0, 0.0
    for s in points:
        SH = sig[:, None] * transfer_eval(sys, s)
        d = float(np.linalg.norm(SH - SH.T, 2)) if SH.size else 0.0
        worst_abs = max(worst_abs, d)
        worst_rel = max(worst_rel, d / (1.0 + float(np.linalg.norm(SH, 2)) if SH.size else d))
    return ReciprocityResult(worst_rel <= tol, worst_abs, worst_rel)


# -- aggregate ----------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyConfig:
    tol: float = 1e-8
    t_grid: tuple | None = None
    k_max: int | None = None
    sample_points: tuple = DEFAULT_SAMPLE_POINTS
    sigma_e: tuple | None = None


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    name: str
    status: str                       # "pass", "fail" or "not_applicable"
    margin: float | None
    details: dict = field(default_factory=dict)
    reason: str | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class ClassificationReport:
    label: str | None
    dims: dict
    tests: dict
    tolerances: dict
    notes: tuple = ()

    @property
    def overall(self) -> bool:
        return all(t.passed for t in self.tests.values())

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "dims": dict(self.dims),
            "overall": self.overall,
            "tests": {name: {"status": t.status, "margin": t.margin,
                             "reason": t.reason, "details": dict(t.details)}
                      for name, t in self.tests.items()},
            "tolerances": dict(self.tolerances),
            "notes": list(self.notes),
        }


def _status(ok):
    return "pass" if ok else "fail"


def classify(sys: StateSpaceModel, config: ClassifyConfig | None = None) -> ClassificationReport:
    """Run every relaxation test and merge the verdicts.

    Sub-test failures (including exceptions such as :class:`NotModal` or
    :class:`PoleError`) are recorded in the report; the function itself
    only raises for a non-square system.
    """
    cfg = config or ClassifyConfig()
    tol = cfg.tol
    sys.require_square()
    tests, notes = {}, []

    try:
        cm = complete_monotonicity_scan(
            sys, None if cfg.t_grid is None else np.asarray(cfg.t_grid),
            cfg.k_max, tol)
        k, t = cm.worst_location
        tests["complete_monotonicity"] = TestResult(
            "complete_monotonicity", _status(cm.verdict), cm.worst_margin,
            {"worst_k": k, "worst_t": t})
    except RelaxkitError as exc:
        tests["complete_monotonicity"] = TestResult(
            "complete_monotonicity", "fail", None, reason=str(exc))

    try:
        modal = modal_decomposition(sys, tol)
    except NotModal as exc:
        modal = None
        reason = f"not modal: {exc}"
        tests["modal"] = TestResult("modal", "not_applicable", None, reason=reason)
        tests["symmetric_realization"] = TestResult(
            "symmetric_realization", "not_applicable", None, reason=reason)
    if modal is not None:
        margin = modal.margin(tol)
        tests["modal"] = TestResult(
            "modal", _status(margin >= -tol), margin,
            {"rates": [float(r) for r in modal.rates],
             "hidden_modes": modal.hidden_modes})
        if modal.marginal:
            notes.append("marginally stable: Hankel analysis unavailable")
        try:
            sym_sys = symmetric_realization(modal, tol)
            rt = 0.0
            for s in cfg.sample_points:
                H = transfer_eval(sys, s)
                H1 = transfer_eval(sym_sys, s)
                rt = max(rt, float(np.linalg.norm(H1 - H, 2))
                         / (1.0 + float(np.linalg.norm(H, 2))))
            tests["symmetric_realization"] = TestResult(
                "symmetric_realization", _status(rt <= tol), -rt,
                {"order": sym_sys.n, "transfer_defect": rt})
        except DomainError as exc:
            tests["symmetric_realization"] = TestResult(
                "symmetric_realization", "fail", min(margin, 0.0), reason=str(exc))

    mh = markov_hankel_test(sys, tol)
    tests["markov_hankel"] = TestResult(
        "markov_hankel", _status(mh.verdict),
        min(mh.margin_even, mh.margin_odd, mh.feedthrough_margin) - mh.symmetry_defect,
        {"margin_even": mh.margin_even, "margin_odd": mh.margin_odd,
         "symmetry_defect": mh.symmetry_defect,
         "feedthrough_margin": mh.feedthrough_margin})

    try:
        rec = reciprocity_check(sys, cfg.sigma_e, cfg.sample_points, tol)
        tests["reciprocity"] = TestResult(
            "reciprocity", _status(rec.verdict), -rec.relative_defect,
            {"max_defect": rec.max_defect})
    except PoleError as exc:
        tests["reciprocity"] = TestResult("reciprocity", "fail", None, reason=str(exc))

    stable, alpha = is_stable(sys)
    ctrb, obsv = is_minimal(sys, method="pbh")
    dims = {"n": sys.n, "m": sys.m, "p": sys.p}
    if not (ctrb and obsv):
        notes.append("realization is not minimal")
    if not stable:
        notes.append("A is not Hurwitz")
    tolerances = {"tol": tol, "k_max": cfg.k_max if cfg.k_max is not None else max(2, 2 * sys.n),
                  "sample_points": [str(complex(s)) for s in cfg.sample_points]}
    return ClassificationReport(sys.label, dims, tests, tolerances, tuple(notes))
