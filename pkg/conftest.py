"""Shared generators for the test suite."""

import random

import pytest

from algdyn.group_ring import LaurentPoly


def make_lopsided(rng: random.Random, dim: int = 2, max_terms: int = 4) -> LaurentPoly:
    """Random f supported in [-1,1]^d whose dominant coefficient is at least twice the rest."""
    box = [tuple(rng.randint(-1, 1) for _ in range(dim)) for _ in range(max_terms + 1)]
    dominant = box[0]
    others = {}
    for exp in box[1:rng.randint(1, max_terms) + 1]:
        if exp != dominant:
            others[exp] = rng.choice([-3, -2, -1, 1, 2, 3])
    rest = sum(abs(c) for c in others.values())
    lead = (2 * rest + rng.randint(1, 3)) * rng.choice([-1, 1])
    return LaurentPoly.from_dict(dim, {dominant: lead, **others})


@pytest.fixture
def lopsided_sample():
    """50 seeded lopsided polynomials over Z^2."""
    rng = random.Random(20240607)
    return [make_lopsided(rng) for _ in range(50)]
