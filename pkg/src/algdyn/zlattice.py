"""
Finite-index sublattices of Z^d, Smith and Hermite normal forms over Z, quotient
groups Z^d / L with coset enumeration, and characters of finite abelian groups.

Matrices are tuples of integer rows. A lattice basis lists its generators as
columns, so the lattice of ``2,1;0,3`` is spanned by (2, 0) and (1, 3).
"""

import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, List, Optional, Sequence, Tuple

from algdyn.errors import DimensionMismatch, LatticeParseError, SingularLattice

log = logging.getLogger(__name__)

Matrix = Tuple[Tuple[int, ...], ...]
Vector = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Integer matrix helpers
# ---------------------------------------------------------------------------

def as_matrix(rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


def identity_matrix(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def shape(A: Sequence[Sequence[int]]) -> Tuple[int, int]:
    return len(A), (len(A[0]) if A else 0)


def mat_mul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    if shape(A)[1] != len(B):
        raise DimensionMismatch(f"cannot multiply {shape(A)} by {shape(B)}")
    cols = list(zip(*B)) if B else []
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in A)


def mat_vec(A: Sequence[Sequence[int]], v: Sequence[int]) -> Vector:
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def integer_determinant(A: Sequence[Sequence[int]]) -> int:
    """Fraction-free (Bareiss) determinant of a square integer matrix."""
    n, m = shape(A)
    if n != m:
        raise DimensionMismatch(f"determinant of non-square {n}x{m} matrix")
    if n == 0:
        return 1
    M = [list(row) for row in A]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def parse_matrix(text: str) -> Matrix:
    """Parse ``rows;separated,by,commas`` into a rectangular integer matrix."""
    if not text.strip():
        raise LatticeParseError("empty matrix", text, 0)
    rows: List[Tuple[int, ...]] = []
    offset = 0
    for row_text in text.split(';'):
        row = []
        col_offset = offset
        for entry in row_text.split(','):
            stripped = entry.strip()
            where = col_offset + (len(entry) - len(entry.lstrip()))
            try:
                row.append(int(stripped))
            except ValueError:
                raise LatticeParseError(f"invalid integer {stripped!r}", text, where) from None
            col_offset += len(entry) + 1
        if rows and len(row) != len(rows[0]):
            raise LatticeParseError(
                f"row has {len(row)} entries, expected {len(rows[0])}", text, offset)
        rows.append(tuple(row))
        offset += len(row_text) + 1
    return tuple(rows)


def format_matrix(A: Sequence[Sequence[int]]) -> str:
    return ';'.join(','.join(str(x) for x in row) for row in A)


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmithDecomposition:
    """U * A * V = S with U, V unimodular and S diagonal, d1 | d2 | ... with zeros last."""

    U: Matrix
    S: Matrix
    V: Matrix
    U_inv: Matrix

    @property
    def invariants(self) -> Tuple[int, ...]:
        m, n = shape(self.S)
        return tuple(self.S[i][i] for i in range(min(m, n)))

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariants if d != 0)


class _SmithReducer:
    """Row/column reduction with the pivot of minimal absolute value."""

    def __init__(self, A: Sequence[Sequence[int]]):
        self.m, self.n = shape(A)
        self.S = [list(row) for row in A]
        self.U = [list(row) for row in identity_matrix(self.m)]
        self.U_inv = [list(row) for row in identity_matrix(self.m)]
        self.V = [list(row) for row in identity_matrix(self.n)]

    # Row operations act on S and U; U_inv receives the inverse column operation.
    def swap_rows(self, i: int, j: int) -> None:
        if i == j:
            return
        self.S[i], self.S[j] = self.S[j], self.S[i]
        self.U[i], self.U[j] = self.U[j], self.U[i]
        for row in self.U_inv:
            row[i], row[j] = row[j], row[i]

    def add_row(self, target: int, source: int, q: int) -> None:
        self.S[target] = [a + q * b for a, b in zip(self.S[target], self.S[source])]
        self.U[target] = [a + q * b for a, b in zip(self.U[target], self.U[source])]
        for row in self.U_inv:
            row[source] -= q * row[target]

    def negate_row(self, i: int) -> None:
        self.S[i] = [-a for a in self.S[i]]
        self.U[i] = [-a for a in self.U[i]]
        for row in self.U_inv:
            row[i] = -row[i]

    def swap_cols(self, i: int, j: int) -> None:
        if i == j:
            return
        for M in (self.S, self.V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_col(self, target: int, source: int, q: int) -> None:
        for M in (self.S, self.V):
            for row in M:
                row[target] += q * row[source]

    def min_pivot(self, t: int) -> Optional[Tuple[int, int]]:
        best = None
        for i in range(t, self.m):
            for j in range(t, self.n):
                a = self.S[i][j]
                if a != 0 and (best is None or abs(a) < abs(self.S[best[0]][best[1]])):
                    best = (i, j)
        return best

    def run(self) -> SmithDecomposition:
        S = self.S
        for t in range(min(self.m, self.n)):
            while True:
                pivot = self.min_pivot(t)
                if pivot is None:
                    return self.result()
                self.swap_rows(t, pivot[0])
                self.swap_cols(t, pivot[1])
                clean = True
                for i in range(t + 1, self.m):
                    if S[i][t]:
                        self.add_row(i, t, -(S[i][t] // S[t][t]))
                        clean = clean and S[i][t] == 0
                for j in range(t + 1, self.n):
                    if S[t][j]:
                        self.add_col(j, t, -(S[t][j] // S[t][t]))
                        clean = clean and S[t][j] == 0
                if not clean:
                    continue
                offender = next(
                    (i for i in range(t + 1, self.m)
                     for j in range(t + 1, self.n) if S[i][j] % S[t][t]),
                    None)
                if offender is None:
                    break
                self.add_row(t, offender, 1)
            if S[t][t] < 0:
                self.negate_row(t)
        return self.result()

    def result(self) -> SmithDecomposition:
        return SmithDecomposition(as_matrix(self.U), as_matrix(self.S),
                                  as_matrix(self.V), as_matrix(self.U_inv))


def smith_normal_form(A: Sequence[Sequence[int]]) -> SmithDecomposition:
    """Smith normal form of an arbitrary rectangular integer matrix."""
    return _SmithReducer(A).run()


# ---------------------------------------------------------------------------
# Hermite normal form and kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteForm:
    """A * W = H in column echelon form; the first ``rank`` columns of H span the column lattice."""

    H: Matrix
    W: Matrix
    rank: int

    @property
    def basis(self) -> Matrix:
        """Canonical generators: the nonzero columns of H, as a matrix."""
        return tuple(row[:self.rank] for row in self.H)


def hermite_normal_form(A: Sequence[Sequence[int]]) -> HermiteForm:
    """Column-style HNF: echelon pivots positive, entries left of a pivot reduced into [0, pivot)."""
    m, n = shape(A)
    H = [list(row) for row in A]
    W = [list(row) for row in identity_matrix(n)]

    def combine(p: int, j: int, x: int, y: int, u: int, v: int) -> None:
        # (col_p, col_j) <- (x*col_p + y*col_j, u*col_p + v*col_j)
        for M in (H, W):
            for row in M:
                a, b = row[p], row[j]
                row[p], row[j] = x * a + y * b, u * a + v * b

    p = 0
    for i in range(m):
        if p >= n:
            break
        for j in range(p + 1, n):
            if H[i][j] != 0:
                a, b = H[i][p], H[i][j]
                g, x, y = ext_gcd(a, b)
                combine(p, j, x, y, -b // g, a // g)
        if H[i][p] == 0:
            continue
        if H[i][p] < 0:
            for M in (H, W):
                for row in M:
                    row[p] = -row[p]
        for j in range(p):
            q = H[i][j] // H[i][p]
            if q:
                for M in (H, W):
                    for row in M:
                        row[j] -= q * row[p]
        p += 1
    return HermiteForm(as_matrix(H), as_matrix(W), p)


def integer_kernel(A: Sequence[Sequence[int]]) -> Matrix:
    """Columns of the returned n x k matrix form a Z-basis of {x in Z^n : A x = 0}."""
    n = shape(A)[1]
    form = hermite_normal_form(A)
    return tuple(tuple(form.W[r][c] for c in range(form.rank, n)) for r in range(n))


def column_lattice_key(generators: Sequence[Sequence[int]]) -> Matrix:
    """Canonical form of the lattice spanned by the columns; equal keys mean equal lattices."""
    return hermite_normal_form(generators).basis


# ---------------------------------------------------------------------------
# Finite abelian groups and characters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Z/m1 x ... x Z/mk with 2 <= m1 | m2 | ... | mk."""

    invariant_factors: Tuple[int, ...] = ()

    def __post_init__(self):
        for m in self.invariant_factors:
            if m < 2:
                raise ValueError(f"invariant factors must be at least 2, got {m}")
        for a, b in zip(self.invariant_factors, self.invariant_factors[1:]):
            if b % a:
                raise ValueError(f"invariant factor {a} does not divide {b}")

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> 'FiniteAbelianGroup':
        """Canonical form of a product of cyclic groups of the given (positive) orders."""
        if any(m < 1 for m in orders):
            raise ValueError("cyclic orders must be positive")
        n = len(orders)
        diag = [[orders[i] if i == j else 0 for j in range(n)] for i in range(n)]
        factors = smith_normal_form(diag).invariants
        return cls(tuple(m for m in factors if m > 1))

    @property
    def order(self) -> int:
        result = 1
        for m in self.invariant_factors:
            result *= m
        return result

    @property
    def identity(self) -> Vector:
        return (0,) * len(self.invariant_factors)

    def elements(self) -> Iterator[Vector]:
        return itertools.product(*(range(m) for m in self.invariant_factors))

    def normalize(self, g: Sequence[int]) -> Vector:
        if len(g) != len(self.invariant_factors):
            raise DimensionMismatch(f"element {tuple(g)} does not match group {self}")
        return tuple(x % m for x, m in zip(g, self.invariant_factors))

    def add(self, g: Sequence[int], h: Sequence[int]) -> Vector:
        return self.normalize([a + b for a, b in zip(g, h)])

    def __str__(self) -> str:
        return '[' + ','.join(str(m) for m in self.invariant_factors) + ']'


@dataclass(frozen=True)
class Character:
    """chi(g) = exp(2 pi i * sum_i weights_i * g_i / m_i)."""

    group: FiniteAbelianGroup
    weights: Tuple[int, ...]

    def __post_init__(self):
        factors = self.group.invariant_factors
        if len(self.weights) != len(factors):
            raise DimensionMismatch(f"character needs {len(factors)} weights, got {len(self.weights)}")
        for w, m in zip(self.weights, factors):
            if not 0 <= w < m:
                raise ValueError(f"weight {w} outside [0, {m})")

    @property
    def is_trivial(self) -> bool:
        return not any(self.weights)


def character_value(chi: Character, g: Sequence[int]) -> Fraction:
    """Exact phase p/q in [0, 1) with chi(g) = exp(2 pi i p/q)."""
    g = chi.group.normalize(g)
    phase = sum((Fraction(w * x, m) for w, x, m in zip(chi.weights, g, chi.group.invariant_factors)),
                Fraction(0))
    return phase - (phase.numerator // phase.denominator)


def characters(G: FiniteAbelianGroup) -> Iterator[Character]:
    for weights in G.elements():
        yield Character(G, tuple(weights))


def dual_group(G: FiniteAbelianGroup) -> FiniteAbelianGroup:
    """Finite abelian groups are self-dual; the dual of G is returned as G itself."""
    return G


# ---------------------------------------------------------------------------
# Lattices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """Finite-index subgroup of Z^d spanned by the columns of a nonsingular d x d basis."""

    basis: Matrix

    def __post_init__(self):
        object.__setattr__(self, 'basis', as_matrix(self.basis))
        m, n = shape(self.basis)
        if m == 0 or m != n:
            raise DimensionMismatch(f"lattice basis must be square and nonempty, got {m}x{n}")
        if integer_determinant(self.basis) == 0:
            raise SingularLattice(f"basis {format_matrix(self.basis)} has zero determinant")

    @classmethod
    def diagonal(cls, entries: Sequence[int]) -> 'Lattice':
        n = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def scalar(cls, dim: int, n: int) -> 'Lattice':
        """(nZ)^d."""
        return cls.diagonal([n] * dim)

    @classmethod
    def identity(cls, dim: int) -> 'Lattice':
        return cls.scalar(dim, 1)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def index(self) -> int:
        return abs(integer_determinant(self.basis))

    @cached_property
    def hnf(self) -> Matrix:
        """Lower triangular, positive diagonal, off-diagonal row entries in [0, diagonal)."""
        return hermite_normal_form(self.basis).H

    @cached_property
    def smith(self) -> SmithDecomposition:
        return smith_normal_form(self.basis)

    def _check(self, v: Sequence[int]) -> None:
        if len(v) != self.dim:
            raise DimensionMismatch(f"vector {tuple(v)} does not have length {self.dim}")

    def reduce(self, v: Sequence[int]) -> Vector:
        """Representative of v + L in the HNF fundamental box."""
        self._check(v)
        h = self.hnf
        w = list(v)
        for i in range(self.dim):
            q = w[i] // h[i][i]
            if q:
                for r in range(i, self.dim):
                    w[r] -= q * h[r][i]
        return tuple(w)

    def contains(self, v: Sequence[int]) -> bool:
        return not any(self.reduce(v))

    def project(self, v: Sequence[int]) -> Vector:
        """Coordinates of v + L in quotient_group(self)."""
        self._check(v)
        snf = self.smith
        coords = []
        for i, s in enumerate(snf.invariants):
            if s > 1:
                coords.append(sum(u * x for u, x in zip(snf.U[i], v)) % s)
        return tuple(coords)

    def format(self) -> str:
        return format_matrix(self.basis)

    def __str__(self) -> str:
        return self.format()


def parse_lattice(text: str, dim: Optional[int] = None) -> Lattice:
    basis = parse_matrix(text)
    m, n = shape(basis)
    if m != n:
        raise LatticeParseError(f"lattice basis must be square, got {m}x{n}", text, 0)
    if dim is not None and m != dim:
        raise DimensionMismatch(f"lattice {text!r} has dimension {m}, expected {dim}")
    return Lattice(basis)


def quotient_group(L: Lattice) -> FiniteAbelianGroup:
    """Z^d / L as invariant factors (factors equal to 1 dropped)."""
    return FiniteAbelianGroup(tuple(s for s in L.smith.invariants if s > 1))


def coset_reps(L: Lattice) -> List[Vector]:
    """One vector per coset, taken from the HNF fundamental box, in lexicographic order."""
    h = L.hnf
    return [tuple(v) for v in itertools.product(*(range(h[i][i]) for i in range(L.dim)))]


def diagonal_family(dim: int, max_n: int) -> List[Lattice]:
    """(NZ)^d for N = 1..max_n."""
    return [Lattice.scalar(dim, n) for n in range(1, max_n + 1)]


def random_hnf_lattices(dim: int, count: int, seed: int, max_diagonal: int = 4) -> List[Lattice]:
    """Seeded sample of lattices given directly by random Hermite normal forms."""
    rng = random.Random(seed)
    lattices = []
    for _ in range(count):
        diag = [rng.randint(1, max_diagonal) for _ in range(dim)]
        rows = []
        for i in range(dim):
            rows.append(tuple(
                rng.randrange(diag[i]) if j < i else (diag[i] if j == i else 0)
                for j in range(dim)))
        lattices.append(Lattice(tuple(rows)))
    log.debug("sampled %d random lattices with seed %d", count, seed)
    return lattices
