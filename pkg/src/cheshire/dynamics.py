"""Joint system-meter evolution with postselection.

The preparation splits into three branches: left arm (meter A shifted by
g_A, meter B untouched) and right arm with either polarization (meter A
untouched, meter B shifted by +g_B or -g_B).  Postselecting the system
leaves the meters in the success-branch wavefunction

    F(x, y) = l phi0(x - g_A) phi0(y)
            + r+ phi0(x) phi0(y - g_B)
            + r- phi0(x) phi0(y + g_B)

with squared norm equal to the postselection success probability P.  The
failed branch is mixed; only its pointer-diagonal density is needed, and
it equals the classically correlated mixture minus |F|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, PositivityError, ValidationError
from .meter import (
    DEFAULT_GRID,
    GaussianMeter,
    Grid,
    GridMeter,
    gaussian_ground_state,
)
from .qsystem import PhotonKet, TransitionAmplitudes

PROBABILITY_TOL = 1e-10
POSITIVITY_TOL = 1e-10
WEIGHT_NORM_TOL = 1e-12
REALIZABILITY_TOL = 1e-9

# Per-branch pointer shifts in units of (g_A, g_B): branch order (L, R+, R-).
BRANCH_SHIFTS_A = (1.0, 0.0, 0.0)
BRANCH_SHIFTS_B = (0.0, 1.0, -1.0)


@dataclass(frozen=True)
class BranchWeights:
    """Preparation amplitudes (a, b, c) on the left arm and the two
    right-arm polarizations; a is the norm of the left-arm component."""

    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        total = abs(self.a) ** 2 + abs(self.b) ** 2 + abs(self.c) ** 2
        if abs(total - 1.0) > WEIGHT_NORM_TOL:
            raise ValidationError(f"branch weights norm^2 = {total!r}, expected 1 within {WEIGHT_NORM_TOL}")

    @classmethod
    def from_preparation(cls, prep: PhotonKet) -> "BranchWeights":
        if not prep.is_normalized:
            raise ValidationError("preparation ket must be normalized")
        amps = prep.amplitudes
        a = math.sqrt(float(abs(amps[0]) ** 2 + abs(amps[1]) ** 2))
        return cls(a, complex(amps[2]), complex(amps[3]))

    @property
    def probabilities(self) -> tuple[float, float, float]:
        return (abs(self.a) ** 2, abs(self.b) ** 2, abs(self.c) ** 2)


def _check_realizable(amps: TransitionAmplitudes, weights: BranchWeights) -> None:
    """Amplitudes must come from some normalized postselection over the
    preparation the weights describe: sum over branches of |amp/weight|^2
    cannot exceed 1."""
    budget = 0.0
    for amp, weight in (
        (amps.l, weights.a),
        (amps.r_plus, weights.b),
        (amps.r_minus, weights.c),
    ):
        w = abs(weight)
        if w < 1e-15:
            if abs(amp) > 1e-12:
                raise ValidationError(
                    "transition amplitude is non-zero on a branch with zero preparation weight"
                )
            continue
        budget += (abs(amp) / w) ** 2
    if budget > 1.0 + REALIZABILITY_TOL:
        raise ValidationError(
            f"amplitudes need postselection norm^2 = {budget!r} > 1; "
            "inconsistent with the given branch weights"
        )


def _pair_overlap0(s1: float, s2: float) -> float:
    return math.exp(-((s1 - s2) ** 2) / 8.0)


def _pair_overlap1(s1: float, s2: float) -> float:
    decay = math.exp(-((s1 - s2) ** 2) / 8.0)
    if decay == 0.0:
        # Gaussian suppression beats the linear mean even at infinite shift
        return 0.0
    return 0.5 * (s1 + s2) * decay


def _branch_shifts(g_a: float, g_b: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    # an unshifted branch stays at 0 even for infinite coupling
    return (
        tuple(s * g_a if s != 0.0 else 0.0 for s in BRANCH_SHIFTS_A),
        tuple(s * g_b if s != 0.0 else 0.0 for s in BRANCH_SHIFTS_B),
    )


def _validate_couplings(g_a: float, g_b: float) -> None:
    # +inf is allowed: it models perfectly distinguishable pointer states
    if math.isnan(g_a) or math.isnan(g_b) or g_a < 0.0 or g_b < 0.0:
        raise ValidationError("couplings must be >= 0")


@dataclass(frozen=True)
class SuccessMoments:
    """Unnormalized success-branch integrals over the joint readout.

    ``norm`` is P = int |F|^2; ``x``, ``y``, ``xy`` carry the weight
    functions x, y and xy against |F|^2 (not divided by P).
    """

    norm: float
    x: float
    y: float
    xy: float


def success_probability(amps: TransitionAmplitudes, g_a: float, g_b: float) -> float:
    """P = |l|^2 + |r+|^2 + |r-|^2 + 2 w_A w_B Re[l*(r+ + r-)]
    + 2 exp(-g_B^2/2) Re[r+* r-], built from pairwise Gaussian overlaps."""
    p = success_moments(amps, g_a, g_b).norm
    if not (-PROBABILITY_TOL <= p <= 1.0 + PROBABILITY_TOL):
        raise ConsistencyError(f"success probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def _product(*factors: float) -> float:
    # an exactly-zero factor annihilates even an infinite partner; this
    # keeps the infinite-coupling limit finite where the moment vanishes
    out = 1.0
    for f in factors:
        if f == 0.0:
            return 0.0
        out *= f
    return out


def success_moments(amps: TransitionAmplitudes, g_a: float, g_b: float) -> SuccessMoments:
    """Closed-form branch-pair sums for P and the first success moments."""
    _validate_couplings(g_a, g_b)
    shifts_a, shifts_b = _branch_shifts(g_a, g_b)
    coeffs = (amps.l, amps.r_plus, amps.r_minus)

    norm = x = y = xy = 0.0
    for j in range(3):
        for k in range(3):
            cc = (complex(coeffs[j]).conjugate() * complex(coeffs[k])).real
            if cc == 0.0:
                continue
            if j == k:
                # identical branch states: unit overlap, mean at the shift
                a0, b0 = 1.0, 1.0
                a1, b1 = shifts_a[j], shifts_b[j]
            else:
                a0 = _pair_overlap0(shifts_a[j], shifts_a[k])
                a1 = _pair_overlap1(shifts_a[j], shifts_a[k])
                b0 = _pair_overlap0(shifts_b[j], shifts_b[k])
                b1 = _pair_overlap1(shifts_b[j], shifts_b[k])
            norm += _product(cc, a0, b0)
            x += _product(cc, a1, b0)
            y += _product(cc, a0, b1)
            xy += _product(cc, a1, b1)
    return SuccessMoments(norm, x, y, xy)


def classical_mixture_moment(
    weights: BranchWeights,
    x_weight: str,
    y_weight: str,
    g_a: float,
    g_b: float,
) -> float:
    """Tr(X_A X_B rho_cl) for X in {1, x}: every branch factorizes, so the
    moment is the weight-averaged product of single-meter means."""
    _validate_couplings(g_a, g_b)
    for w in (x_weight, y_weight):
        if w not in ("1", "x"):
            raise ValidationError(f"pointer observable must be '1' or 'x', got {w!r}")
    shifts_a, shifts_b = _branch_shifts(g_a, g_b)
    total = 0.0
    for p, sa, sb in zip(weights.probabilities, shifts_a, shifts_b):
        mean_a = 1.0 if x_weight == "1" else sa
        mean_b = 1.0 if y_weight == "1" else sb
        total += p * mean_a * mean_b
    return total


@dataclass(frozen=True, eq=False)
class JointMeterState:
    """Success-branch meter wavefunction F for a given amplitude triple."""

    amps: TransitionAmplitudes
    meter_a: GaussianMeter | GridMeter
    meter_b: GaussianMeter | GridMeter
    g_a: float
    g_b: float

    def __post_init__(self):
        _validate_couplings(self.g_a, self.g_b)
        if not (math.isfinite(self.g_a) and math.isfinite(self.g_b)):
            raise ValidationError("grid evaluation needs finite couplings")
        for meter, g in ((self.meter_a, self.g_a), (self.meter_b, self.g_b)):
            if isinstance(meter, GaussianMeter) and meter.g != g:
                raise ValidationError("meter coupling disagrees with the joint-state coupling")

    @classmethod
    def gaussian(cls, amps: TransitionAmplitudes, g_a: float, g_b: float) -> "JointMeterState":
        return cls(amps, GaussianMeter(g_a), GaussianMeter(g_b), g_a, g_b)

    def branch_waves_a(self, x: np.ndarray) -> np.ndarray:
        shifts, _ = _branch_shifts(self.g_a, self.g_b)
        return _branch_waves(self.meter_a, shifts, x)

    def branch_waves_b(self, y: np.ndarray) -> np.ndarray:
        _, shifts = _branch_shifts(self.g_a, self.g_b)
        return _branch_waves(self.meter_b, shifts, y)

    def evaluate(self, x, y) -> np.ndarray:
        """F(x, y) with numpy broadcasting over coordinate arrays."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        wa = self.branch_waves_a(x.ravel()).reshape(3, *x.shape)
        wb = self.branch_waves_b(y.ravel()).reshape(3, *y.shape)
        coeffs = np.array([self.amps.l, self.amps.r_plus, self.amps.r_minus])
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=complex)
        for k in range(3):
            out = out + coeffs[k] * wa[k] * wb[k]
        return out

    def success_probability(self) -> float:
        if isinstance(self.meter_a, GaussianMeter) and isinstance(self.meter_b, GaussianMeter):
            return success_probability(self.amps, self.g_a, self.g_b)
        moments = grid_moments(self)
        if not (-PROBABILITY_TOL <= moments.norm <= 1.0 + PROBABILITY_TOL):
            raise ConsistencyError(f"success probability {moments.norm!r} outside [0, 1]")
        return min(max(moments.norm, 0.0), 1.0)


def _branch_waves(meter, shifts, x: np.ndarray) -> np.ndarray:
    """Rows are the pointer wavefunction shifted by each branch shift."""
    from .meter import _shifted  # shared lattice-shift kernel

    if isinstance(meter, GaussianMeter):
        return np.stack([gaussian_ground_state(x - s).astype(complex) for s in shifts])
    if isinstance(meter, GridMeter):
        if not np.array_equal(x, meter.grid.points):
            raise ValidationError("grid meter branches must be evaluated on the meter's own grid")
        return np.stack([_shifted(meter, s) for s in shifts])
    raise ValidationError(f"expected GaussianMeter or GridMeter, got {type(meter).__name__}")


def _trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n_points, grid.spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def grid_moments(
    state: JointMeterState,
    grid_a: Grid | None = None,
    grid_b: Grid | None = None,
    block_rows: int = 256,
) -> SuccessMoments:
    """Trapezoidal quadrature of (1, x, y, xy) against |F|^2.

    Works row-block by row-block so memory stays O(block * n_y) even on
    fine grids.
    """
    grid_a = grid_a or getattr(state.meter_a, "grid", None) or DEFAULT_GRID
    grid_b = grid_b or getattr(state.meter_b, "grid", None) or DEFAULT_GRID
    x = grid_a.points
    y = grid_b.points
    wa = state.branch_waves_a(x)
    wb = state.branch_waves_b(y)
    coeffs = np.array([state.amps.l, state.amps.r_plus, state.amps.r_minus])

    tw_a = _trapezoid_weights(grid_a)
    tw_b = _trapezoid_weights(grid_b)
    norm = sx = sy = sxy = 0.0
    for lo in range(0, len(x), block_rows):
        hi = min(lo + block_rows, len(x))
        f_block = np.einsum("k,kx,ky->xy", coeffs, wa[:, lo:hi], wb)
        density = np.abs(f_block) ** 2
        row_mass = density @ tw_b
        row_first = density @ (y * tw_b)
        block_w = tw_a[lo:hi]
        block_xw = x[lo:hi] * block_w
        norm += float(block_w @ row_mass)
        sx += float(block_xw @ row_mass)
        sy += float(block_w @ row_first)
        sxy += float(block_xw @ row_first)
    return SuccessMoments(norm, sx, sy, sxy)


def classical_mixture_density(
    weights: BranchWeights,
    g_a: float,
    g_b: float,
    grid_a: Grid = DEFAULT_GRID,
    grid_b: Grid = DEFAULT_GRID,
) -> np.ndarray:
    """p_cl(x, y): the branch-weighted product of shifted pointer densities."""
    _validate_couplings(g_a, g_b)
    if not (math.isfinite(g_a) and math.isfinite(g_b)):
        raise ValidationError("grid evaluation needs finite couplings")
    x = grid_a.points
    y = grid_b.points
    shifts_a, shifts_b = _branch_shifts(g_a, g_b)
    out = np.zeros((len(x), len(y)))
    for p, sa, sb in zip(weights.probabilities, shifts_a, shifts_b):
        if p == 0.0:
            continue
        da = gaussian_ground_state(x - sa) ** 2
        db = gaussian_ground_state(y - sb) ** 2
        out += p * np.outer(da, db)
    return out


@dataclass(frozen=True, eq=False)
class FailureBranch:
    """Pointer-space density of the failed-postselection branch."""

    density: np.ndarray
    grid_a: Grid
    grid_b: Grid
    total_probability: float

    def moment(self, x_weight: str = "1", y_weight: str = "1") -> float:
        """Trapezoidal integral of w_A(x) w_B(y) p_f(x, y)."""
        for w in (x_weight, y_weight):
            if w not in ("1", "x"):
                raise ValidationError(f"pointer observable must be '1' or 'x', got {w!r}")
        va = _trapezoid_weights(self.grid_a)
        vb = _trapezoid_weights(self.grid_b)
        if x_weight == "x":
            va = va * self.grid_a.points
        if y_weight == "x":
            vb = vb * self.grid_b.points
        return float(va @ self.density @ vb)


def failure_density(
    amps: TransitionAmplitudes,
    weights: BranchWeights,
    g_a: float,
    g_b: float,
    grid_a: Grid = DEFAULT_GRID,
    grid_b: Grid = DEFAULT_GRID,
) -> FailureBranch:
    """p_f = p_cl - |F|^2, the diagonal of the failed-branch meter state.

    Non-negative whenever the amplitudes are realizable from the branch
    weights; a dip below -1e-10 signals inconsistent inputs.
    """
    _check_realizable(amps, weights)
    p_cl = classical_mixture_density(weights, g_a, g_b, grid_a, grid_b)
    state = JointMeterState.gaussian(amps, g_a, g_b)
    f = np.einsum(
        "k,kx,ky->xy",
        np.array([amps.l, amps.r_plus, amps.r_minus]),
        state.branch_waves_a(grid_a.points),
        state.branch_waves_b(grid_b.points),
    )
    p_f = p_cl - np.abs(f) ** 2
    worst = float(p_f.min())
    if worst < -POSITIVITY_TOL:
        raise PositivityError(
            f"failure density reaches {worst!r} < -{POSITIVITY_TOL}; "
            "amplitudes and branch weights are inconsistent"
        )
    np.clip(p_f, 0.0, None, out=p_f)
    total = float(_trapezoid_weights(grid_a) @ p_f @ _trapezoid_weights(grid_b))
    p_f.setflags(write=False)
    return FailureBranch(p_f, grid_a, grid_b, total)
