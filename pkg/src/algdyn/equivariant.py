"""
Equivariant affine maps tau(x) = a(x) + b on principal systems.

All injectivity and surjectivity questions are answered on the dual side, where the
linear part a acts on the finitely generated group dual to X_f(L). A compact-side
map is injective exactly when its dual is surjective, and surjective exactly when
its dual is injective.
"""

import enum
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

import sympy
from tqdm import tqdm

from algdyn.errors import (
    DimensionMismatch,
    EquivarianceViolation,
    InvalidEndomorphism,
    NonSquareMatrix,
)
from algdyn.group_ring import LaurentPoly
from algdyn.principal_system import action_matrix
from algdyn.zlattice import (
    FiniteAbelianGroup,
    Lattice,
    Matrix,
    as_matrix,
    column_lattice_key,
    coset_reps,
    integer_kernel,
    mat_mul,
    shape,
    smith_normal_form,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffineMapSpec:
    """Linear part a (acting through multiplication on the dual) plus a translation b.

    b holds one rational mod 1 per coset representative of a stratum; a single entry
    is read as the constant point and is broadcast to every stratum.
    """

    a: LaurentPoly
    b: Tuple[Fraction, ...] = (Fraction(0),)

    def __post_init__(self):
        object.__setattr__(self, 'b', tuple(Fraction(x) % 1 for x in self.b))
        if not self.b:
            raise EquivarianceViolation("translation needs at least one coordinate")


# ---------------------------------------------------------------------------
# Endomorphisms of finitely generated abelian groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndoOnFinitelyGenerated:
    """Endomorphism of Z/m1 x ... x Z/mk x Z^r given on column vectors.

    ``factors`` lists the cyclic orders with 0 for each free coordinate; row i of
    ``matrix`` is kept reduced mod factors[i].
    """

    factors: Tuple[int, ...]
    matrix: Matrix

    def __post_init__(self):
        factors = tuple(int(m) for m in self.factors)
        if any(m < 0 for m in factors):
            raise InvalidEndomorphism(f"negative cyclic order in {factors}")
        n = len(factors)
        m_rows, m_cols = shape(self.matrix)
        if (m_rows, m_cols) != (n, n):
            raise InvalidEndomorphism(f"matrix is {m_rows}x{m_cols}, group has {n} generators")
        matrix = as_matrix(
            [x % factors[i] if factors[i] else x for x in row] for i, row in enumerate(self.matrix))
        for j, mj in enumerate(factors):
            if mj == 0:
                continue
            for i, mi in enumerate(factors):
                image = mj * matrix[i][j]
                if (mi and image % mi) or (not mi and image):
                    raise InvalidEndomorphism(
                        f"column {j} does not preserve the relation {mj}*e{j} (row {i})")
        object.__setattr__(self, 'factors', factors)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def size(self) -> int:
        return len(self.factors)

    @property
    def free_rank(self) -> int:
        return sum(1 for m in self.factors if m == 0)

    @property
    def torsion(self) -> FiniteAbelianGroup:
        return FiniteAbelianGroup.from_orders([m for m in self.factors if m])

    def relations(self) -> Matrix:
        """Generators m_i * e_i of the relation lattice, as columns."""
        cols = [i for i, m in enumerate(self.factors) if m]
        return tuple(tuple(self.factors[c] if r == c else 0 for c in cols) for r in range(self.size))

    def apply(self, x: Sequence[int]) -> Tuple[int, ...]:
        return tuple(
            (v % m if m else v)
            for v, m in zip((sum(a * b for a, b in zip(row, x)) for row in self.matrix), self.factors))


def stratum_endomorphism(a: LaurentPoly, f: LaurentPoly, L: Lattice) -> EndoOnFinitelyGenerated:
    """Multiplication by a on the dual of X_f(L), in Smith coordinates of action_matrix(f, L)."""
    if a.dim != f.dim or f.dim != L.dim:
        raise DimensionMismatch(f"dimensions differ: a={a.dim}, f={f.dim}, lattice={L.dim}")
    snf = smith_normal_form(action_matrix(f, L))
    conjugated = mat_mul(mat_mul(snf.U, action_matrix(a, L)), snf.U_inv)
    keep = [i for i, d in enumerate(snf.invariants) if d != 1]
    factors = tuple(snf.invariants[i] for i in keep)
    matrix = tuple(tuple(conjugated[i][j] for j in keep) for i in keep)
    return EndoOnFinitelyGenerated(factors, matrix)


def _with_relations(e: EndoOnFinitelyGenerated, M: Matrix, sign: int) -> Matrix:
    rel = e.relations()
    return tuple(tuple(row) + tuple(sign * x for x in rel_row) for row, rel_row in zip(M, rel))


def _in_relations(e: EndoOnFinitelyGenerated, x: Sequence[int]) -> bool:
    return all((v % m == 0) if m else v == 0 for v, m in zip(x, e.factors))


def _kernel_generators(e: EndoOnFinitelyGenerated, M: Matrix) -> Matrix:
    """Columns spanning {x : M x in relations}, the preimage lattice of ker."""
    n = e.size
    basis = integer_kernel(_with_relations(e, M, -1))
    return tuple(basis[r] for r in range(n))


def dual_injective(e: EndoOnFinitelyGenerated) -> bool:
    """e has trivial kernel (equivalently the compact-side map is surjective)."""
    if e.size == 0:
        return True
    gens = _kernel_generators(e, e.matrix)
    return all(_in_relations(e, col) for col in zip(*gens))


def dual_surjective(e: EndoOnFinitelyGenerated) -> bool:
    """e has trivial cokernel (equivalently the compact-side map is injective)."""
    if e.size == 0:
        return True
    invariants = smith_normal_form(_with_relations(e, e.matrix, 1)).invariants
    return len(invariants) == e.size and all(d == 1 for d in invariants)


def brute_force_injective(e: EndoOnFinitelyGenerated) -> bool:
    """Exhaustive kernel check on a finite group."""
    if e.free_rank:
        raise ValueError("brute force needs a finite group")
    return sum(1 for x in _elements(e.factors) if not any(e.apply(x))) == 1


def brute_force_surjective(e: EndoOnFinitelyGenerated) -> bool:
    """Exhaustive image check on a finite group."""
    if e.free_rank:
        raise ValueError("brute force needs a finite group")
    elements = list(_elements(e.factors))
    return len({e.apply(x) for x in elements}) == len(elements)


def _elements(factors: Sequence[int]) -> Iterable[Tuple[int, ...]]:
    return itertools.product(*(range(m) for m in factors))


# ---------------------------------------------------------------------------
# Stabilisation of iterates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainStabilization:
    """ker e^k = ker e^(k+1); subgroups are given by canonical generator columns of their preimages."""

    k: int
    kernel: Matrix
    image: Matrix


def image_chain_stabilization(e: EndoOnFinitelyGenerated, max_steps: int = 10_000) -> ChainStabilization:
    """Smallest k where the kernel chain of e^k stops growing.

    By duality this is where the compact-side image chain tau^k(X) stabilises.
    """
    n = e.size
    if n == 0:
        return ChainStabilization(0, (), ())
    power = as_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])
    current = column_lattice_key(_kernel_generators(e, power))
    for k in range(max_steps):
        following = EndoOnFinitelyGenerated(e.factors, mat_mul(e.matrix, power)).matrix
        nxt = column_lattice_key(_kernel_generators(e, following))
        if nxt == current:
            image = column_lattice_key(_with_relations(e, power, 1))
            log.debug("kernel chain of %s stabilises at k = %d", e.factors, k)
            return ChainStabilization(k, current, image)
        power, current = following, nxt
    raise RuntimeError(f"kernel chain did not stabilise within {max_steps} steps")


# ---------------------------------------------------------------------------
# Rational rank and the surjunctivity experiment
# ---------------------------------------------------------------------------

class RationalRankVerdict(enum.Enum):
    INJECTIVE_IMPLIES_SURJECTIVE = 'InjectiveImpliesSurjective'
    DUAL_NOT_SURJECTIVE = 'DualNotSurjective'

    def __str__(self) -> str:
        return self.value


def rational_rank_check(dual_matrix: Sequence[Sequence[int]]) -> RationalRankVerdict:
    """Decide over Q whether the dual of an endomorphism of a solenoid is invertible."""
    m, n = shape(dual_matrix)
    if m != n:
        raise NonSquareMatrix(f"dual matrix must be square, got {m}x{n}")
    if m == 0 or sympy.Matrix(dual_matrix).det() != 0:
        return RationalRankVerdict.INJECTIVE_IMPLIES_SURJECTIVE
    return RationalRankVerdict.DUAL_NOT_SURJECTIVE


def validate_translation(b: Sequence[Fraction], f: LaurentPoly, L: Lattice) -> Tuple[Fraction, ...]:
    """Expand b to the stratum and check it is a Z^d-fixed point of X_f(L)."""
    reps = coset_reps(L)
    if len(b) == 1:
        point = tuple(b) * len(reps)
    elif len(b) == len(reps):
        point = tuple(b)
    else:
        raise EquivarianceViolation(
            f"translation has {len(b)} coordinates, stratum {L} has {len(reps)} cosets")
    if len(set(point)) > 1:
        raise EquivarianceViolation(f"translation is not fixed by the shift on stratum {L}")
    position = {r: k for k, r in enumerate(reps)}
    for s in reps:
        total = sum((coef * point[position[L.reduce(tuple(g - x for g, x in zip(exp, s)))]]
                     for exp, coef in f.terms), Fraction(0))
        if total.denominator != 1:
            raise EquivarianceViolation(f"translation is not a point of X_f on stratum {L}")
    return point


@dataclass(frozen=True)
class StratumVerdict:
    lattice: Lattice
    injective: bool
    surjective: bool
    endomorphism: EndoOnFinitelyGenerated

    @property
    def consistent(self) -> bool:
        return self.surjective or not self.injective


@dataclass(frozen=True)
class SurjunctivityReport:
    lattices_tested: Tuple[Lattice, ...]
    strata: Tuple[StratumVerdict, ...]

    @property
    def counterexamples(self) -> Tuple[StratumVerdict, ...]:
        return tuple(s for s in self.strata if not s.consistent)

    @property
    def overall(self) -> str:
        return 'Consistent' if not self.counterexamples else 'Counterexample'


def analyze_stratum(a: LaurentPoly, f: LaurentPoly, L: Lattice) -> StratumVerdict:
    e = stratum_endomorphism(a, f, L)
    return StratumVerdict(L, injective=dual_surjective(e), surjective=dual_injective(e), endomorphism=e)


def _analyze_args(args: Tuple[LaurentPoly, LaurentPoly, Lattice]) -> StratumVerdict:
    return analyze_stratum(*args)


def surjunctivity_experiment(
    tau: AffineMapSpec,
    f: LaurentPoly,
    lattices: Sequence[Lattice],
    jobs: int = 1,
    progress: bool = False,
) -> SurjunctivityReport:
    """Check injective => surjective for the linear part of tau on every stratum X_f(L).

    The translation only has to be valid; it does not affect either verdict.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be positive, got {jobs}")
    if tau.a.dim != f.dim:
        raise DimensionMismatch(f"linear part has dimension {tau.a.dim}, f has dimension {f.dim}")
    for L in lattices:
        if L.dim != f.dim:
            raise DimensionMismatch(f"lattice {L} has dimension {L.dim}, f has dimension {f.dim}")
        validate_translation(tau.b, f, L)
    work = [(tau.a, f, L) for L in lattices]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            strata: List[StratumVerdict] = list(tqdm(
                pool.map(_analyze_args, work), total=len(work), desc='strata', disable=not progress))
    else:
        strata = [_analyze_args(w) for w in tqdm(work, desc='strata', disable=not progress)]
    report = SurjunctivityReport(tuple(lattices), tuple(strata))
    if report.counterexamples:
        log.warning("injective but not surjective on %d strata", len(report.counterexamples))
    return report

