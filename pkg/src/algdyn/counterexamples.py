"""
Executable counterexamples and constructions.

  - the subshift Sigma of bi-infinite 0/1 sequences with at most one chain of 1s,
    with the injective, non-surjective map that extends every chain one step left
  - the shift embedding of a compressible torus alphabet, a(x) = (0, x0, x1, ...)
  - multiplication by p on the p-adic integers, seen on digit truncations
  - periodic points approximating any finite window (residual finiteness of Z^d)

Windows use zero extension: cells outside [lo, hi] are 0.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Hashable, Iterator, List, Mapping, Optional, Sequence, Tuple

import sympy
from tqdm import tqdm

from algdyn.errors import DimensionMismatch, NotInSigma, WindowTooLarge, WitnessRefuted
from algdyn.zlattice import Lattice, Vector, coset_reps, smith_normal_form

log = logging.getLogger(__name__)

SIGMA_MAX_WIDTH = 16


# ---------------------------------------------------------------------------
# The subshift Sigma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryWindow:
    """Bits on the integer interval [lo, lo + len(cells) - 1]."""

    lo: int
    cells: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'cells', tuple(int(c) for c in self.cells))
        if not self.cells:
            raise ValueError("a window needs at least one cell")
        if any(c not in (0, 1) for c in self.cells):
            raise ValueError(f"cells must be bits, got {self.cells}")

    @classmethod
    def from_ones(cls, lo: int, hi: int, ones: Sequence[int]) -> 'BinaryWindow':
        ones = set(ones)
        return cls(lo, tuple(1 if n in ones else 0 for n in range(lo, hi + 1)))

    @classmethod
    def parse(cls, text: str) -> 'BinaryWindow':
        bits, _, origin = text.partition('@')
        return cls(int(origin) if origin else 0, tuple(int(b) for b in bits.strip()))

    @property
    def hi(self) -> int:
        return self.lo + len(self.cells) - 1

    @property
    def width(self) -> int:
        return len(self.cells)

    def at(self, n: int) -> int:
        return self.cells[n - self.lo] if self.lo <= n <= self.hi else 0

    @property
    def ones(self) -> Tuple[int, ...]:
        return tuple(n for n, c in zip(range(self.lo, self.hi + 1), self.cells) if c)

    def __str__(self) -> str:
        return ''.join(str(c) for c in self.cells) + f"@{self.lo}"


def sigma_member(w: BinaryWindow) -> bool:
    """At most one contiguous run of 1s."""
    runs = sum(1 for a, b in zip((0,) + w.cells, w.cells) if (a, b) == (0, 1))
    return runs <= 1


def sigma_tau(w: BinaryWindow) -> BinaryWindow:
    """Cell n becomes 1 when (w(n), w(n+1)) = (0, 1); the output lives on [lo - 1, hi]."""
    if not sigma_member(w):
        raise NotInSigma(f"window {w} has more than one chain of 1s")
    out = []
    for n in range(w.lo - 1, w.hi + 1):
        pair = (w.at(n), w.at(n + 1))
        out.append(1 if pair == (0, 1) else pair[0])
    return BinaryWindow(w.lo - 1, tuple(out))


def sigma_windows(width: int, lo: int = 0) -> Iterator[BinaryWindow]:
    """Every Sigma-window on [lo, lo + width - 1]: the zero window, then each run [i, j]."""
    hi = lo + width - 1
    yield BinaryWindow(lo, (0,) * width)
    for i in range(lo, hi + 1):
        for j in range(i, hi + 1):
            yield BinaryWindow.from_ones(lo, hi, range(i, j + 1))


def _check_width(width: int) -> None:
    if not 1 <= width <= SIGMA_MAX_WIDTH:
        raise ValueError(f"width must be between 1 and {SIGMA_MAX_WIDTH}, got {width}")


def sigma_injectivity_exhaustive(width: int, progress: bool = False) -> bool:
    """No two Sigma-windows of the given width share a tau-image."""
    _check_width(width)
    seen = set()
    count = 0
    for w in tqdm(sigma_windows(width), desc=f'sigma width {width}', disable=not progress):
        seen.add(sigma_tau(w).ones)
        count += 1
    log.debug("width %d: %d windows, %d distinct images", width, count, len(seen))
    return len(seen) == count


def sigma_preimages(target: BinaryWindow) -> List[BinaryWindow]:
    """All finitely supported Sigma points whose tau-image is the zero-extended target.

    tau never clears a 1, so any preimage is supported inside [lo, hi]; searching the
    Sigma-windows on [lo, hi + 1] covers the whole dependence neighbourhood.
    """
    wanted = target.ones
    return [w for w in sigma_windows(target.width + 1, target.lo) if sigma_tau(w).ones == wanted]


def sigma_nonsurjectivity_witness(width: int) -> BinaryWindow:
    """A window with a single 1, checked to have no tau-preimage."""
    if width < 2:
        raise ValueError(f"width must be at least 2, got {width}")
    witness = BinaryWindow.from_ones(0, width - 1, [width // 2])
    found = sigma_preimages(witness)
    if found:
        raise WitnessRefuted(f"{witness} has preimage {found[0]}")
    return witness


# ---------------------------------------------------------------------------
# Compressible alphabets
# ---------------------------------------------------------------------------

def shift_embed(x: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """a(x)(0) = 0 and a(x)(n) = x(n - 1) on a truncation of T^N."""
    return (Fraction(0),) + tuple(Fraction(v) % 1 for v in x)


def shift_embed_preimage(y: Sequence[Fraction]) -> Optional[Tuple[Fraction, ...]]:
    if Fraction(y[0]) % 1 != 0:
        return None
    return tuple(Fraction(v) % 1 for v in y[1:])


@dataclass(frozen=True)
class ShiftEmbedReport:
    level: int
    example_source: Tuple[Fraction, ...]
    example_image: Tuple[Fraction, ...]
    samples_checked: int
    injective: bool
    excluded_target: Tuple[Fraction, ...]
    excluded_has_preimage: bool


def shift_embed_demo(m: int, denominator: int = 2, max_samples: int = 4096) -> ShiftEmbedReport:
    """Injectivity on a grid of level-m points and a level-(m+1) target with no preimage."""
    if m < 1:
        raise ValueError(f"truncation level must be positive, got {m}")
    grid = [Fraction(k, denominator) for k in range(denominator)]
    images = {}
    for x in itertools.islice(itertools.product(grid, repeat=m), max_samples):
        y = shift_embed(x)
        if shift_embed_preimage(y) != tuple(x):
            raise RuntimeError(f"shift embedding does not invert at {x}")
        images[y] = x
    samples = min(max_samples, denominator ** m)
    source = (Fraction(1, 3),) * m
    excluded = (Fraction(1, 2),) + (Fraction(0),) * m
    return ShiftEmbedReport(
        level=m,
        example_source=source,
        example_image=shift_embed(source),
        samples_checked=samples,
        injective=len(images) == samples,
        excluded_target=excluded,
        excluded_has_preimage=shift_embed_preimage(excluded) is not None,
    )


# ---------------------------------------------------------------------------
# p-adic integers
# ---------------------------------------------------------------------------

def padic_digits(x: int, p: int, m: int) -> Tuple[int, ...]:
    """Base-p digits of x mod p^m, least significant first."""
    x %= p ** m
    digits = []
    for _ in range(m):
        x, d = divmod(x, p)
        digits.append(d)
    return tuple(digits)


def padic_value(digits: Sequence[int], p: int) -> int:
    return sum(d * p ** i for i, d in enumerate(digits))


def padic_times_p(digits: Sequence[int]) -> Tuple[int, ...]:
    """x -> p x from Z/p^m to Z/p^(m+1): the digits move up one place."""
    return (0,) + tuple(digits)


@dataclass(frozen=True)
class PadicReport:
    p: int
    level: int
    kernel_order: int
    cokernel_order: int
    excluded: Tuple[int, ...]
    enumerated: bool


def padic_times_p_demo(p: int, m: int, max_enumeration: int = 4096) -> PadicReport:
    """Times p is injective Z/p^m -> Z/p^(m+1) with cokernel Z/p at every level."""
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    if m < 1:
        raise ValueError(f"truncation level must be positive, got {m}")
    target_order = p ** (m + 1)
    # image of 1 -> p inside Z / p^(m+1): cokernel is Z / gcd(p, p^(m+1))
    cokernel = 1
    for d in smith_normal_form([[p, target_order]]).invariants:
        cokernel *= d
    image_order = target_order // cokernel
    kernel_order = p ** m // image_order
    enumerated = p ** m <= max_enumeration
    if enumerated:
        images = {padic_times_p(padic_digits(x, p, m)) for x in range(p ** m)}
        if len(images) != image_order:
            raise RuntimeError(f"digit enumeration found {len(images)} images, expected {image_order}")
    return PadicReport(p, m, kernel_order, cokernel, padic_digits(1, p, m + 1), enumerated)


# ---------------------------------------------------------------------------
# Periodic points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicConfiguration:
    """An L-fixed configuration, stored by its values on the coset representatives."""

    dim: int
    lattice: Lattice
    values: Tuple[Tuple[Vector, Hashable], ...]

    @cached_property
    def _table(self) -> Dict[Vector, Hashable]:
        return dict(self.values)

    def at(self, gamma: Sequence[int]) -> Hashable:
        return self._table[self.lattice.reduce(gamma)]


def periodic_densify(
    x_window: Mapping[Sequence[int], Hashable],
    N: int,
    d: int,
    default: Hashable = 0,
    lattice: Optional[Lattice] = None,
) -> PeriodicConfiguration:
    """Periodic configuration agreeing with x_window on its support Omega.

    Without ``lattice`` the period is (N Z)^d and Omega must lie in [0, N)^d; with a
    lattice, no two points of Omega may be congruent modulo it. Cells of the
    fundamental domain outside Omega take ``default``.
    """
    if N < 1:
        raise ValueError(f"period must be positive, got {N}")
    if lattice is None:
        lattice = Lattice.scalar(d, N)
        for omega in x_window:
            if len(omega) != d:
                raise DimensionMismatch(f"cell {tuple(omega)} is not in Z^{d}")
            if any(not 0 <= c < N for c in omega):
                raise WindowTooLarge(f"cell {tuple(omega)} lies outside [0, {N})^{d}")
    elif lattice.dim != d:
        raise DimensionMismatch(f"lattice has dimension {lattice.dim}, expected {d}")
    table: Dict[Vector, Hashable] = {r: default for r in coset_reps(lattice)}
    placed: Dict[Vector, Vector] = {}
    for omega, symbol in x_window.items():
        omega = tuple(omega)
        if len(omega) != d:
            raise DimensionMismatch(f"cell {omega} is not in Z^{d}")
        rep = lattice.reduce(omega)
        if rep in placed:
            raise WindowTooLarge(f"cells {placed[rep]} and {omega} are congruent modulo {lattice}")
        placed[rep] = omega
        table[rep] = symbol
    return PeriodicConfiguration(d, lattice, tuple(sorted(table.items())))
