"""
Principal algebraic dynamical systems X_f over Z^d and their fixed-point strata.

X_f(L), the points fixed by a finite-index lattice L, is computed on the dual side:
its Pontryagin dual is the cokernel of multiplication by f on Z[Z^d / L], so the
Smith normal form of that matrix gives X_f(L) = T^k x F directly.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import mpmath
import numpy as np

from algdyn.errors import DimensionMismatch, OracleMismatch, VanishingCharacterValue
from algdyn.group_ring import (
    Exponent,
    L1InverseApprox,
    LaurentPoly,
    format_exponent,
    is_lopsided,
    l1_inverse_approx,
)
from algdyn.zlattice import (
    FiniteAbelianGroup,
    Lattice,
    Matrix,
    SmithDecomposition,
    as_matrix,
    character_value,
    characters,
    coset_reps,
    quotient_group,
    smith_normal_form,
)

log = logging.getLogger(__name__)

DEFAULT_CERTIFICATE_EPS = Fraction(1, 10 ** 6)


@dataclass(frozen=True)
class PrincipalSystem:
    """The system dual to Z[Z^d] / (f)."""

    f: LaurentPoly

    @property
    def dim(self) -> int:
        return self.f.dim

    def fixed_points(self, L: Lattice) -> 'FixedPointStructure':
        return fixed_point_structure(self, L)


@dataclass(frozen=True)
class FixedPointStructure:
    """X_f(L) = T^torus_rank x torsion, with the presentation it was read from."""

    torus_rank: int
    torsion: FiniteAbelianGroup
    presentation: SmithDecomposition

    @property
    def is_finite(self) -> bool:
        return self.torus_rank == 0


def action_matrix(f: LaurentPoly, L: Lattice) -> Matrix:
    """Multiplication by f on Z[Z^d / L] in the coset_reps basis.

    Entry (r, s) sums the coefficients f(g) over g with s + g = r mod L.
    """
    if f.dim != L.dim:
        raise DimensionMismatch(f"polynomial has dimension {f.dim}, lattice has dimension {L.dim}")
    reps = coset_reps(L)
    position = {r: k for k, r in enumerate(reps)}
    n = len(reps)
    M = [[0] * n for _ in range(n)]
    for col, s in enumerate(reps):
        for exp, coef in f.terms:
            target = L.reduce(tuple(a + b for a, b in zip(s, exp)))
            M[position[target]][col] += coef
    return as_matrix(M)


def fixed_point_structure(sys: PrincipalSystem, L: Lattice) -> FixedPointStructure:
    snf = smith_normal_form(action_matrix(sys.f, L))
    invariants = snf.invariants
    torus_rank = sum(1 for d in invariants if d == 0)
    torsion = FiniteAbelianGroup(tuple(d for d in invariants if d > 1))
    log.debug("X_f(%s) for f = %s: torus rank %d, torsion %s", L, sys.f, torus_rank, torsion)
    return FixedPointStructure(torus_rank, torsion, snf)


def periodic_point_count(f: LaurentPoly, L: Lattice) -> Optional[int]:
    """Number of L-fixed points of X_f, or None when the stratum contains a torus."""
    structure = fixed_point_structure(PrincipalSystem(f), L)
    return structure.torsion.order if structure.is_finite else None


def torsion_count_oracle(f: LaurentPoly, L: Lattice, tolerance: float = 1e-6, dps: int = 50) -> int:
    """|prod_chi f^(chi)| over the characters of Z^d / L, evaluated in high precision.

    This is an independent check of fixed_point_structure: the character values are
    the eigenvalues of action_matrix(f, L).
    """
    if f.dim != L.dim:
        raise DimensionMismatch(f"polynomial has dimension {f.dim}, lattice has dimension {L.dim}")
    G = quotient_group(L)
    projected = [(L.project(exp), coef) for exp, coef in f.terms]
    with mpmath.workdps(dps):
        product = mpmath.mpf(1)
        for chi in characters(G):
            value = mpmath.mpc(0)
            for g, coef in projected:
                phase = character_value(chi, g)
                value += coef * mpmath.expjpi(mpmath.mpf(2 * phase.numerator) / phase.denominator)
            magnitude = abs(value)
            if magnitude < tolerance:
                raise VanishingCharacterValue(
                    f"f vanishes at character {chi.weights} of {G}: X_f({L}) has a torus factor")
            product *= magnitude
        rounded = int(mpmath.nint(product))
        if abs(product - rounded) >= tolerance:
            raise OracleMismatch(f"character product {mpmath.nstr(product, 15)} is not within "
                                 f"{tolerance} of an integer")
    return rounded


def is_torsion_module(f: LaurentPoly) -> bool:
    """Z[Z^d] is a domain, so Z[Z^d]/(f) is torsion exactly when f != 0."""
    return not f.is_zero


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lopsided:
    exponent: Exponent

    def __str__(self) -> str:
        return f"Lopsided({format_exponent(self.exponent)})"


@dataclass(frozen=True)
class GridWitness:
    """|f| on the torus grid of spacing 2^-grid_exponent stays above the Lipschitz error bound."""

    grid_exponent: int
    min_value: float
    error_bound: float

    def __str__(self) -> str:
        return f"Grid(2^-{self.grid_exponent})"


@dataclass(frozen=True)
class Expansive:
    witness: Union[Lopsided, GridWitness]

    def __str__(self) -> str:
        return f"Expansive({self.witness})"


@dataclass(frozen=True)
class Mixing:
    inverse: L1InverseApprox

    def __str__(self) -> str:
        return "Mixing"


@dataclass(frozen=True)
class Unknown:
    reason: str = ''

    def __str__(self) -> str:
        return "Unknown"


def lipschitz_constant(f: LaurentPoly) -> float:
    """K = 2 pi sum_g |f(g)| * |g|_1, a Lipschitz bound for |f| on the torus."""
    return 2 * math.pi * sum(abs(c) * sum(abs(e) for e in exp) for exp, c in f.terms)


def torus_grid_minimum(f: LaurentPoly, grid_exponent: int) -> float:
    """min |f| over the grid {k * 2^-grid_exponent}^d of angle coordinates."""
    steps = 2 ** grid_exponent
    theta = np.arange(steps) / steps
    grids = np.meshgrid(*([theta] * f.dim), indexing='ij')
    values = np.zeros(grids[0].shape, dtype=complex)
    for exp, coef in f.terms:
        phase = sum(e * g for e, g in zip(exp, grids))
        values += coef * np.exp(2j * np.pi * phase)
    return float(np.abs(values).min())


def expansivity_certificate(f: LaurentPoly, grid_exponent: int = 6) -> Union[Expansive, Unknown]:
    """Sound positive certificate that (X_f, Z^d) is expansive; never refutes."""
    if grid_exponent < 1:
        raise ValueError(f"grid exponent must be positive, got {grid_exponent}")
    g0 = is_lopsided(f)
    if g0 is not None:
        return Expansive(Lopsided(g0))
    if f.is_zero:
        return Unknown("zero polynomial")
    if f.dim > 2:
        return Unknown("grid certificate supports d <= 2")
    h = 2.0 ** -grid_exponent
    bound = lipschitz_constant(f) * h * math.sqrt(f.dim) / 2
    minimum = torus_grid_minimum(f, grid_exponent)
    # floating evaluation error on the grid
    slack = 1e-9 * f.l1_norm()
    log.debug("grid 2^-%d for %s: min |f| = %g, error bound %g", grid_exponent, f, minimum, bound)
    if minimum > bound + slack:
        return Expansive(GridWitness(grid_exponent, minimum, bound))
    return Unknown(f"grid minimum {minimum:.3g} does not clear error bound {bound:.3g}")


def mixing_certificate(f: LaurentPoly, eps: Fraction = DEFAULT_CERTIFICATE_EPS) -> Union[Mixing, Unknown]:
    """Mixing certified by an l1 inverse built around the lopsided term; never refutes."""
    if is_lopsided(f) is None:
        return Unknown("no l1-invertibility certificate")
    return Mixing(l1_inverse_approx(f, eps))


def surjunctivity_routes(f: LaurentPoly) -> Tuple[str, ...]:
    """Sufficient conditions for surjunctivity of (X_f, Z^d) that hold for f.

    ``noetherian-adcc`` always applies over Z^d; ``expansive-dense-periodic`` needs
    certified l1-invertibility; ``torsion-module`` needs f != 0.
    """
    routes = ['noetherian-adcc']
    if is_lopsided(f) is not None:
        routes.append('expansive-dense-periodic')
    if is_torsion_module(f):
        routes.append('torsion-module')
    return tuple(routes)
