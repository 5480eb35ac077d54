"""Finite-dimensional embedding of the meter state and its negativity.

The success branch lives in the span of two A-meter states and three
B-meter states, so meter-meter entanglement is a qubit-qutrit question.
Orthonormalizing each span with the known Gaussian overlaps embeds
|F>/sqrt(norm) into at most C^2 (x) C^3, where the partial-transpose
criterion is exact: negativity > 0 if and only if the state is entangled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import _validate_couplings
from .errors import OrthogonalPostselection, ValidationError
from .meter import gaussian_pair_overlap0
from .qsystem import TransitionAmplitudes

RANK_TOL = 1e-12
NORM_EPS = 1e-12
EIGENVALUE_NOISE = 1e-14


def gram_orthonormalize(gram: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Coordinates of the input vectors in an orthonormal basis of their span.

    Given the Gram matrix G_ij = <v_i|v_j>, returns L of shape (n, rank)
    with L L^dagger = G; row i holds the coordinates of v_i.  Directions
    with eigenvalue <= tol are dropped, so linearly dependent inputs
    (coincident meter states at zero coupling) reduce the dimension
    instead of erroring.
    """
    g = np.asarray(gram, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("gram matrix must be square")
    if np.max(np.abs(g - g.conj().T)) > 1e-12:
        raise ValidationError("gram matrix must be Hermitian")
    eigenvalues, vectors = np.linalg.eigh(g)
    if eigenvalues.min() < -1e-10:
        raise ValidationError(f"gram matrix has negative eigenvalue {eigenvalues.min()!r}")
    keep = eigenvalues > tol
    if not np.any(keep):
        raise ValidationError("gram matrix has no positive directions")
    order = np.argsort(eigenvalues[keep])[::-1]
    lam = eigenvalues[keep][order]
    u = vectors[:, keep][:, order]
    return u * np.sqrt(lam)


@dataclass(frozen=True, eq=False)
class EmbeddedMeterState:
    """Success-branch meter state in orthonormal product coordinates.

    ``basis_a`` (2 x dim_a) and ``basis_b`` (3 x dim_b) give the meter
    states' coordinates; ``amplitudes`` (dim_a x dim_b) is the normalized
    state tensor; ``branch_norm_sq`` is the squared norm of the raw branch,
    which equals the postselection success probability for physical inputs.
    """

    basis_a: np.ndarray
    basis_b: np.ndarray
    amplitudes: np.ndarray
    branch_norm_sq: float

    @property
    def dim_a(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim_b(self) -> int:
        return self.amplitudes.shape[1]

    def density(self) -> np.ndarray:
        """Rank-1 density matrix on the dim_a * dim_b product space."""
        vec = self.amplitudes.ravel()
        return np.outer(vec, vec.conj())


def embed(amps: TransitionAmplitudes, g_a: float, g_b: float) -> EmbeddedMeterState:
    """Express the success branch in orthonormal qubit (x) qutrit coordinates.

    Accepts any amplitude triple, so limiting configurations (for example
    Bell-like triples unreachable from normalized photon states) can be
    embedded directly.
    """
    _validate_couplings(g_a, g_b)
    shifts_a = (0.0, g_a)
    shifts_b = (0.0, g_b, -g_b)
    basis_a = gram_orthonormalize(_shift_gram(shifts_a))
    basis_b = gram_orthonormalize(_shift_gram(shifts_b))

    # branches pair (coefficient, A-state index, B-state index)
    branches = ((amps.l, 1, 0), (amps.r_plus, 0, 1), (amps.r_minus, 0, 2))
    tensor = np.zeros((basis_a.shape[1], basis_b.shape[1]), dtype=complex)
    for coeff, ia, ib in branches:
        tensor += complex(coeff) * np.outer(basis_a[ia], basis_b[ib])

    norm_sq = float(np.sum(np.abs(tensor) ** 2))
    if norm_sq <= NORM_EPS:
        raise OrthogonalPostselection(
            f"success branch has squared norm {norm_sq!r}; nothing to embed"
        )
    return EmbeddedMeterState(basis_a, basis_b, tensor / math.sqrt(norm_sq), norm_sq)


def _shift_gram(shifts: tuple[float, ...]) -> np.ndarray:
    n = len(shifts)
    g = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            g[i, j] = g[j, i] = gaussian_pair_overlap0(shifts[i], shifts[j])
    return g


@dataclass(frozen=True)
class NegativityReport:
    """Partial-transpose entanglement summary for the embedded state.

    ``ppt_conclusive`` is True when the dimensions make the criterion
    necessary and sufficient (always here: 2x3 or smaller), so zero
    negativity certifies separability.
    """

    negativity: float
    min_pt_eigenvalue: float
    dim_a: int
    dim_b: int
    ppt_conclusive: bool

    @property
    def entangled(self) -> bool:
        return self.negativity > 0.0


def negativity(state: EmbeddedMeterState) -> NegativityReport:
    """Sum of |negative eigenvalues| of the partial transpose over B.

    Eigenvalues within the numerical noise floor of zero count as zero, so
    separable states report exactly 0.
    """
    da, db = state.dim_a, state.dim_b
    rho = state.density()
    pt = rho.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(da * db, da * db)
    eigenvalues = np.linalg.eigvalsh(pt)
    neg = float(-eigenvalues[eigenvalues < -EIGENVALUE_NOISE].sum()) + 0.0
    conclusive = (min(da, db) <= 2 and max(da, db) <= 3)
    return NegativityReport(neg, float(eigenvalues[0]), da, db, conclusive)


def meter_negativity(amps: TransitionAmplitudes, g_a: float, g_b: float) -> NegativityReport:
    """Embed and score in one step."""
    return negativity(embed(amps, g_a, g_b))
