"""The meter-entanglement indicator and its optimizers.

After a successful postselection the joint cross-moment <xy> of the two
pointers splits into a classical part, an entanglement part, and a local
interference part.  With unbiased pointers the classical and local parts
vanish, so the signed indicator

    C = 2 <xy> P = g_A g_B w_A w_B Re Tr(E sigma_R rho Pi_L),
    w = exp(-g^2 / 8)

witnesses meter-meter entanglement through its sign and magnitude.  Over
couplings the prefactor g w(g) peaks at g = 2 per meter; over normalized
state pairs the trace factor peaks at 1/4, giving the absolute extremum
C = 1/e at g_A = g_B = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sciopt

from .dynamics import (
    _branch_shifts,
    _product,
    _validate_couplings,
    JointMeterState,
    success_moments,
)
from .errors import FlatObjective, OrthogonalPostselection, ValidationError
from .meter import gaussian_overlap0, gaussian_overlap1, matrix_element
from .qsystem import (
    PhotonDensity,
    PhotonEffect,
    PhotonKet,
    TransitionAmplitudes,
    trace_term,
)

POSTSELECTION_EPS = 1e-12

OPTIMAL_COUPLING = 2.0
MAX_TRACE_TERM = 0.25

_BRANCH_PROJECTOR_SLICES = ((0, 2), (2, 3), (3, 4))


@dataclass(frozen=True)
class MomentDecomposition:
    """Split of a success-branch moment <F|X_A X_B|F> into its origins.

    ``m_cl`` collects the diagonal branch terms (classical correlations),
    ``m_ent`` the left-right cross terms (meter-meter entanglement), and
    ``m_li`` the interference between the two right-arm branches, which is
    local to meter B.
    """

    m_cl: float
    m_ent: float
    m_li: float

    @property
    def total(self) -> float:
        return self.m_cl + self.m_ent + self.m_li


@dataclass(frozen=True)
class CheshireResult:
    """Indicator value with its ingredients."""

    c_value: float
    p_success: float
    g_a: float
    g_b: float
    trace_term: complex

    def __post_init__(self):
        bound = indicator_bound(self.g_a, self.g_b)
        if abs(self.c_value) > bound + 1e-10:
            raise ValidationError(
                f"indicator {self.c_value!r} exceeds the state-independent bound {bound!r}"
            )

    @property
    def couplings(self) -> tuple[float, float]:
        return (self.g_a, self.g_b)


def indicator_bound(g_a: float, g_b: float) -> float:
    """Largest |C| over all states: g_A g_B w_A w_B / 4."""
    _validate_couplings(g_a, g_b)
    w_a = gaussian_overlap0(g_a) if math.isfinite(g_a) else 0.0
    w_b = gaussian_overlap0(g_b) if math.isfinite(g_b) else 0.0
    return _product(g_a, w_a, g_b, w_b) / 4.0


def moment_decomposition(
    state: JointMeterState, x_weight: str = "x", y_weight: str = "x"
) -> MomentDecomposition:
    """Classical / entanglement / local-interference split of the moment.

    Built from single-meter matrix elements between the shifted branch
    states, so it works for both analytic and grid meters.
    """
    shifts_a, shifts_b = _branch_shifts(state.g_a, state.g_b)
    coeffs = (state.amps.l, state.amps.r_plus, state.amps.r_minus)

    def element(j: int, k: int) -> complex:
        ma = matrix_element(state.meter_a, shifts_a[j], shifts_a[k], x_weight)
        mb = matrix_element(state.meter_b, shifts_b[j], shifts_b[k], y_weight)
        return complex(coeffs[j]).conjugate() * complex(coeffs[k]) * ma * mb

    m_cl = sum(element(j, j).real for j in range(3))
    m_ent = sum(2.0 * element(0, k).real for k in (1, 2))
    m_li = 2.0 * element(1, 2).real
    return MomentDecomposition(m_cl, m_ent, m_li)


def cross_moment(amps: TransitionAmplitudes, g_a: float, g_b: float) -> float:
    """<xy> P = 2 o1(g_A) o1(g_B) Re[l* (r+ - r-)] for Gaussian meters.

    The diagonal and right-right terms carry a zero-mean pointer factor,
    so only the left-right entanglement terms survive.
    """
    _validate_couplings(g_a, g_b)
    if not (math.isfinite(g_a) and math.isfinite(g_b)):
        return 0.0
    coupling = 2.0 * gaussian_overlap1(g_a) * gaussian_overlap1(g_b)
    return coupling * (complex(amps.l).conjugate() * complex(amps.polarization_difference)).real


def _effect_matrix(E) -> np.ndarray:
    if isinstance(E, PhotonKet):
        return E.effect().matrix
    if isinstance(E, PhotonEffect):
        return E.matrix
    raise ValidationError(f"postselection must be a PhotonKet or PhotonEffect, got {type(E).__name__}")


def _density_matrix(rho) -> np.ndarray:
    if isinstance(rho, PhotonKet):
        return rho.density().matrix
    if isinstance(rho, PhotonDensity):
        return rho.matrix
    raise ValidationError(f"preparation must be a PhotonKet or PhotonDensity, got {type(rho).__name__}")


def _mixed_success_probability(e: np.ndarray, r: np.ndarray, g_a: float, g_b: float) -> float:
    """P = sum_ij Tr[E P_i rho P_j] <M_j|M_i> over the three branch
    projectors, with <M_j|M_i> the Gaussian meter-state overlaps."""
    shifts_a, shifts_b = _branch_shifts(g_a, g_b)
    p = 0.0
    for i, (ilo, ihi) in enumerate(_BRANCH_PROJECTOR_SLICES):
        for j, (jlo, jhi) in enumerate(_BRANCH_PROJECTOR_SLICES):
            block = complex(np.trace(e[jlo:jhi, ilo:ihi] @ r[ilo:ihi, jlo:jhi]))
            if block == 0.0:
                continue
            if i == j:
                overlap = 1.0
            else:
                da = shifts_a[j] - shifts_a[i]
                db = shifts_b[j] - shifts_b[i]
                overlap = math.exp(-(da * da + db * db) / 8.0)
            p += (block * overlap).real
    return p


def cheshire_analytic(E, rho, g_a: float, g_b: float) -> CheshireResult:
    """Exact Gaussian-meter indicator for (possibly mixed) E and rho."""
    _validate_couplings(g_a, g_b)
    e = _effect_matrix(E)
    r = _density_matrix(rho)
    t = trace_term(PhotonEffect(np.asarray(e)), PhotonDensity(np.asarray(r)))
    w_a = gaussian_overlap0(g_a) if math.isfinite(g_a) else 0.0
    w_b = gaussian_overlap0(g_b) if math.isfinite(g_b) else 0.0
    c = _product(g_a, w_a, g_b, w_b) * t.real
    if math.isfinite(g_a) and math.isfinite(g_b):
        p = _mixed_success_probability(e, r, g_a, g_b)
    else:
        p = _diagonal_success(e, r)
    return CheshireResult(c, p, g_a, g_b, t)


def _diagonal_success(e: np.ndarray, r: np.ndarray) -> float:
    # infinite couplings: meter overlaps vanish, only diagonal blocks remain
    p = 0.0
    for lo, hi in _BRANCH_PROJECTOR_SLICES:
        p += float(np.trace(e[lo:hi, lo:hi] @ r[lo:hi, lo:hi]).real)
    return p


def local_averages(
    amps: TransitionAmplitudes, g_a: float, g_b: float, eps: float = POSTSELECTION_EPS
) -> tuple[float, float, float]:
    """Postselected single-pointer means (<x>, <y>, P).

    In the weak limit <x>/g_A -> Re L_w and <y>/g_B -> Re Sigma_w.
    """
    m = success_moments(amps, g_a, g_b)
    if m.norm <= eps:
        raise OrthogonalPostselection(
            f"success probability {m.norm!r} <= {eps!r}; pointer averages are undefined"
        )
    return (m.x / m.norm, m.y / m.norm, m.norm)


def _golden_section_max(fn, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Maximize a unimodal function on [lo, hi]; returns the argmax."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class CouplingOptimum:
    g_a: float
    g_b: float
    c_value: float


def optimize_couplings(E, rho, g_max: float = 8.0) -> CouplingOptimum:
    """Arg-max of |C| over the couplings.

    C factorizes as [g_A w(g_A)][g_B w(g_B)] Re Tr(.), so each coupling
    maximizes g exp(-g^2/8) separately; the peak sits at g = 2.
    """
    t = trace_term(
        PhotonEffect(np.asarray(_effect_matrix(E))),
        PhotonDensity(np.asarray(_density_matrix(rho))),
    )
    if t.real == 0.0:
        raise FlatObjective("Re Tr(E sigma_R rho Pi_L) = 0; the indicator vanishes identically")
    g_star = _golden_section_max(lambda g: g * gaussian_overlap0(g), 0.0, g_max)
    c_star = (g_star * gaussian_overlap0(g_star)) ** 2 * t.real
    return CouplingOptimum(g_star, g_star, c_star)


@dataclass(frozen=True)
class StateOptimum:
    prep: PhotonKet
    post: PhotonKet
    c_value: float
    trace_term: complex


def _pair_from_raw(raw: np.ndarray) -> tuple[PhotonKet, PhotonKet]:
    prep = PhotonKet.normalized(raw[0:4] + 1j * raw[4:8])
    post = PhotonKet.normalized(raw[8:12] + 1j * raw[12:16])
    return prep, post


def _state_objective(raw: np.ndarray) -> float:
    prep, post = _pair_from_raw(raw)
    return trace_term(post, prep).real


def optimize_states(g_a: float, g_b: float, n_starts: int = 8, seed: int = 0) -> StateOptimum:
    """Maximize C over normalized pure state pairs at fixed couplings.

    Multi-start quasi-Newton search over the raw real parametrization of
    the pair, normalized inside the objective; deterministic seeds per
    start, best value wins, ties broken by the earliest start.
    """
    _validate_couplings(g_a, g_b)
    if not (g_a > 0.0 and g_b > 0.0 and math.isfinite(g_a) and math.isfinite(g_b)):
        raise ValidationError("state optimization needs finite positive couplings")
    best_raw = None
    best_value = -math.inf
    for start in range(n_starts):
        rng = np.random.default_rng([seed, start])
        raw0 = rng.standard_normal(16)
        result = _sciopt.minimize(
            lambda raw: -_state_objective(raw),
            raw0,
            method="L-BFGS-B",
            options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 1000},
        )
        value = -float(result.fun)
        if value > best_value + 1e-15:
            best_value = value
            best_raw = result.x
    prep, post = _pair_from_raw(best_raw)
    t = trace_term(post, prep)
    prefactor = _product(g_a, gaussian_overlap0(g_a), g_b, gaussian_overlap0(g_b))
    return StateOptimum(prep, post, prefactor * t.real, t)
