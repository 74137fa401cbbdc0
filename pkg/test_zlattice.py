#!/usr/bin/env python3
"""Tests for Smith/Hermite normal forms, lattices, quotient groups and characters."""

import cmath
import itertools
import math
import random
from collections import Counter
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies

from algdyn.errors import DimensionMismatch, LatticeParseError, SingularLattice
from algdyn.zlattice import (
    Character,
    FiniteAbelianGroup,
    Lattice,
    character_value,
    characters,
    column_lattice_key,
    coset_reps,
    diagonal_family,
    dual_group,
    format_matrix,
    hermite_normal_form,
    identity_matrix,
    integer_determinant,
    integer_kernel,
    mat_mul,
    mat_vec,
    parse_lattice,
    parse_matrix,
    quotient_group,
    random_hnf_lattices,
    smith_normal_form,
)


def minors_oracle(A):
    """Invariant factors as quotients of successive gcds of k x k minors."""
    m, n = len(A), len(A[0])
    factors = []
    previous = 1
    for k in range(1, min(m, n) + 1):
        gcd = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                gcd = math.gcd(gcd, integer_determinant([[A[r][c] for c in cols] for r in rows]))
        if gcd == 0:
            factors.extend([0] * (min(m, n) - k + 1))
            break
        factors.append(gcd // previous)
        previous = gcd
    return tuple(factors)


def random_matrix(rng, max_size=5, bound=9):
    m, n = rng.randint(1, max_size), rng.randint(1, max_size)
    return tuple(tuple(rng.randint(-bound, bound) for _ in range(n)) for _ in range(m))


def test_snf_example():
    assert smith_normal_form(parse_matrix("2,4;6,8")).invariants == (2, 4)
    assert smith_normal_form(parse_matrix("0,0;0,0")).invariants == (0, 0)
    assert smith_normal_form(parse_matrix("6")).invariants == (6,)
    assert smith_normal_form(parse_matrix("-3,0;0,0")).invariants == (3, 0)


def test_snf_matches_minors_oracle():
    rng = random.Random(1)
    for _ in range(500):
        A = random_matrix(rng)
        snf = smith_normal_form(A)
        assert snf.invariants == minors_oracle(A), f"{format_matrix(A)}: {snf.invariants}"
        assert mat_mul(mat_mul(snf.U, A), snf.V) == snf.S
        assert abs(sympy.Matrix(snf.U).det()) == 1
        assert abs(sympy.Matrix(snf.V).det()) == 1
        assert mat_mul(snf.U, snf.U_inv) == identity_matrix(len(A))


def test_snf_divisibility_and_zeros_last():
    rng = random.Random(2)
    for _ in range(100):
        invariants = smith_normal_form(random_matrix(rng)).invariants
        nonzero = [d for d in invariants if d]
        assert invariants[:len(nonzero)] == tuple(nonzero), f"zeros not last in {invariants}"
        assert all(d > 0 for d in nonzero)
        for a, b in zip(nonzero, nonzero[1:]):
            assert b % a == 0, f"{a} does not divide {b}"


@settings(max_examples=50)
@given(strategies.lists(strategies.lists(strategies.integers(-20, 20), min_size=3, max_size=3),
                        min_size=3, max_size=3))
def test_integer_determinant_matches_sympy(rows):
    assert integer_determinant(rows) == sympy.Matrix(rows).det()


def test_hnf_is_echelon_with_unimodular_transform():
    rng = random.Random(3)
    for _ in range(100):
        A = random_matrix(rng)
        form = hermite_normal_form(A)
        assert mat_mul(A, form.W) == form.H
        assert abs(sympy.Matrix(form.W).det()) == 1
        assert form.rank == sympy.Matrix(A).rank()
        for c in range(form.rank, len(form.H[0])):
            assert all(row[c] == 0 for row in form.H)


def test_integer_kernel():
    kernel = integer_kernel(parse_matrix("1,2,3;2,4,6"))
    assert len(kernel) == 3 and len(kernel[0]) == 2
    for c in range(2):
        column = [row[c] for row in kernel]
        assert mat_vec(parse_matrix("1,2,3;2,4,6"), column) == (0, 0)
    assert integer_kernel(parse_matrix("1,0;0,1")) == ((), ())


def test_column_lattice_key_identifies_equal_lattices():
    assert column_lattice_key(parse_matrix("2,0;0,3")) == column_lattice_key(parse_matrix("2,2;0,3"))
    assert column_lattice_key(parse_matrix("2,0;0,3")) != column_lattice_key(parse_matrix("2,0;0,6"))


def test_parse_matrix_errors():
    with pytest.raises(LatticeParseError) as info:
        parse_matrix("1,2;3,x")
    assert info.value.position == 6
    with pytest.raises(LatticeParseError):
        parse_matrix("1,2;3")
    with pytest.raises(LatticeParseError):
        parse_lattice("1,2")


def test_lattice_validation():
    with pytest.raises(SingularLattice):
        parse_lattice("1,2;2,4")
    with pytest.raises(DimensionMismatch):
        parse_lattice("2,0;0,2", dim=3)
    assert parse_lattice("5").index == 5


def test_coset_reps_and_reduce():
    L = parse_lattice("2,0;1,3")
    reps = coset_reps(L)
    assert len(reps) == L.index == 6
    assert reps == sorted(reps)
    assert len({L.reduce(v) for v in itertools.product(range(-4, 5), repeat=2)}) == 6
    assert L.contains((2, 1)) and L.contains((0, 3))
    assert not L.contains((1, 0))
    for v in itertools.product(range(-3, 4), repeat=2):
        assert L.reduce(v) in reps
        assert L.contains(tuple(a - b for a, b in zip(v, L.reduce(v))))


def test_quotient_group_and_projection():
    L = Lattice.diagonal([2, 4])
    G = quotient_group(L)
    assert G == FiniteAbelianGroup((2, 4))
    assert quotient_group(Lattice.diagonal([2, 3])) == FiniteAbelianGroup((6,))
    for v in itertools.product(range(-5, 6), repeat=2):
        w = tuple(a + b for a, b in zip(v, (2, 4)))
        assert L.project(v) == L.project(w)
    projections = {L.project(r) for r in coset_reps(L)}
    assert projections == set(G.elements())


def test_random_lattices_are_seeded():
    first = random_hnf_lattices(2, 5, seed=7)
    assert first == random_hnf_lattices(2, 5, seed=7)
    assert all(1 <= L.index <= 16 for L in first)
    assert [L.index for L in diagonal_family(2, 3)] == [1, 4, 9]


def test_finite_abelian_group_canonical_form():
    assert FiniteAbelianGroup.from_orders([4, 6]) == FiniteAbelianGroup((2, 12))
    assert FiniteAbelianGroup.from_orders([1, 1]).order == 1
    assert str(FiniteAbelianGroup((2, 4))) == "[2,4]"
    with pytest.raises(ValueError):
        FiniteAbelianGroup((4, 6))


def test_characters_are_homomorphisms():
    G = FiniteAbelianGroup((2, 6))
    chars = list(characters(G))
    assert len(chars) == G.order
    assert dual_group(G) == G
    for chi in chars:
        for g, h in itertools.product(G.elements(), repeat=2):
            total = character_value(chi, g) + character_value(chi, h)
            assert character_value(chi, G.add(g, h)) == total - math.floor(total)


def test_character_orthogonality():
    G = FiniteAbelianGroup((3, 3))
    for chi in characters(G):
        total = sum(cmath.exp(2j * cmath.pi * float(character_value(chi, g))) for g in G.elements())
        expected = G.order if chi.is_trivial else 0
        assert abs(total - expected) < 1e-9, f"{chi.weights}: {total}"


def test_character_value_range():
    chi = Character(FiniteAbelianGroup((4,)), (3,))
    assert character_value(chi, (1,)) == Fraction(3, 4)
    assert character_value(chi, (2,)) == Fraction(1, 2)
    assert character_value(chi, (-1,)) == Fraction(1, 4)


def abelian_groups(limit):
    """Every finite abelian group of order at most limit, as invariant factors."""
    def extend(prefix, order):
        yield FiniteAbelianGroup(prefix)
        step = prefix[-1] if prefix else 1
        d = max(step, 2)
        while order * d <= limit:
            if d % step == 0:
                yield from extend(prefix + (d,), order * d)
            d += 1
    return list(extend((), 1))


def test_character_orthogonality_on_small_groups():
    groups = abelian_groups(64)
    assert FiniteAbelianGroup((2, 2, 2, 2, 2, 2)) in groups
    assert len({G.order for G in groups}) == 64
    for G in groups:
        elements = list(G.elements())
        for chi in characters(G):
            phases = Counter(character_value(chi, g) for g in elements)
            if chi.is_trivial:
                assert phases == Counter({Fraction(0): G.order})
                continue
            # a nontrivial character takes each value of its image subgroup of Q/Z equally often
            n = len(phases)
            assert n > 1, f"{G} {chi.weights}"
            assert set(phases) == {Fraction(k, n) for k in range(n)}, f"{G} {chi.weights}"
            assert set(phases.values()) == {G.order // n}, f"{G} {chi.weights}"
