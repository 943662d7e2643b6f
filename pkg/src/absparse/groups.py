"""Elements, characters, and GF(p) linear algebra for Z_{p1}^{n1} x ... x Z_{pt}^{nt}.

Subspaces are carried per prime factor in reduced row echelon form, the
canonical representation used for equality of subspaces and cosets.  All
values are immutable; random draws take a caller-owned numpy Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, Sequence

from .cyclotomic import CycInt, CycRational
from .errors import EnumerationGuardError, SpecMismatchError

ENUMERATION_GUARD = 1 << 24
_MAX_REJECTION_DRAWS = 10**6

__all__ = [
    "GroupSpec",
    "GroupElement",
    "PrimeSubspace",
    "ProductSubspace",
    "Coset",
    "character_value",
    "rref",
    "rref_solve",
    "nullspace",
    "random_subspace",
    "enumerate_cosets",
    "enumerate_subspaces",
    "dilate_element",
]


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(math.isqrt(p)) + 1))


@dataclass(frozen=True)
class GroupSpec:
    """The group Z_{p1}^{n1} x ... x Z_{pt}^{nt} for distinct primes p_i."""

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("at least one factor required")
        primes = [p for p, _ in self.factors]
        if len(set(primes)) != len(primes):
            raise ValueError("primes must be pairwise distinct")
        for p, n in self.factors:
            if not _is_prime(p):
                raise ValueError(f"not a prime: {p}")
            if n < 1:
                raise ValueError(f"factor exponent must be >= 1, got {n}")

    @classmethod
    def single(cls, p: int, n: int) -> "GroupSpec":
        return cls(((p, n),))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def num_factors(self) -> int:
        return len(self.factors)

    @property
    def order(self) -> int:
        return math.prod(p**n for p, n in self.factors)

    @property
    def m(self) -> int:
        return math.prod(self.primes)

    @property
    def phi_m(self) -> int:
        return math.prod(p - 1 for p in self.primes)

    @property
    def factor_sizes(self) -> tuple[int, ...]:
        return tuple(p**n for p, n in self.factors)

    def is_single_prime(self) -> bool:
        return len(self.factors) == 1

    # -- lexicographic indexing (last coordinate of last factor fastest) --

    def element(self, coords: Sequence[Sequence[int]]) -> "GroupElement":
        return GroupElement(self, tuple(tuple(c % p for c in xs)
                                        for (p, _), xs in zip(self.factors, coords)))

    def zero(self) -> "GroupElement":
        return GroupElement(self, tuple((0,) * n for _, n in self.factors))

    def lex_index(self, x: "GroupElement") -> int:
        if x.spec != self:
            raise SpecMismatchError("element bound to a different group")
        idx = 0
        for (p, n), xs in zip(self.factors, x.coords):
            for c in xs:
                idx = idx * p + c
        return idx

    def from_index(self, i: int) -> "GroupElement":
        if not 0 <= i < self.order:
            raise IndexError(f"index {i} out of range for group of order {self.order}")
        digits = []
        for p, n in reversed(self.factors):
            xs = []
            for _ in range(n):
                xs.append(i % p)
                i //= p
            digits.append(tuple(reversed(xs)))
        return GroupElement(self, tuple(reversed(digits)))

    def elements(self) -> Iterator["GroupElement"]:
        if self.order > ENUMERATION_GUARD:
            raise EnumerationGuardError(f"group order {self.order} exceeds guard")
        for i in range(self.order):
            yield self.from_index(i)


@dataclass(frozen=True)
class GroupElement:
    spec: GroupSpec
    coords: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.coords) != len(self.spec.factors):
            raise ValueError("coordinate blocks do not match the factor count")
        for (p, n), xs in zip(self.spec.factors, self.coords):
            if len(xs) != n or any(not 0 <= c < p for c in xs):
                raise ValueError("coordinate out of range")

    def _require_same(self, other: "GroupElement") -> None:
        if self.spec != other.spec:
            raise SpecMismatchError("elements bound to different groups")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._require_same(other)
        return GroupElement(self.spec, tuple(
            tuple((a + b) % p for a, b in zip(xs, ys))
            for (p, _), xs, ys in zip(self.spec.factors, self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.spec, tuple(
            tuple((-a) % p for a in xs)
            for (p, _), xs in zip(self.spec.factors, self.coords)))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def scale(self, k: int) -> "GroupElement":
        return GroupElement(self.spec, tuple(
            tuple((k * a) % p for a in xs)
            for (p, _), xs in zip(self.spec.factors, self.coords)))

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in xs) for xs in self.coords)

    def index(self) -> int:
        return self.spec.lex_index(self)


def character_value(r: GroupElement, x: GroupElement) -> CycRational:
    """chi_r(x) = prod_i w_{p_i}^{r_i . x_i}, an exact unit-modulus value."""
    r._require_same(x)
    primes = r.spec.primes
    exps = [sum(a * b for a, b in zip(rs, xs)) % p
            for p, rs, xs in zip(primes, r.coords, x.coords)]
    return CycRational.make(CycInt.monomial(primes, exps))


def dilate_element(x: GroupElement, i: int) -> GroupElement:
    """i^{-1} * x componentwise; single-prime specs only, i a unit mod p."""
    if not x.spec.is_single_prime():
        raise SpecMismatchError("dilation is defined for single-prime groups only")
    p = x.spec.primes[0]
    if i % p == 0:
        raise ValueError(f"{i} is not a unit mod {p}")
    inv = pow(i, p - 2, p) if p > 2 else 1
    return x.scale(inv)


# -- GF(p) row reduction -----------------------------------------------------


def rref(p: int, rows: Sequence[Sequence[int]]) -> tuple[tuple[tuple[int, ...], ...], tuple[int, ...]]:
    """Reduced row echelon form over Z_p; returns (nonzero rows, pivot columns)."""
    mat = [[c % p for c in row] for row in rows]
    ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = pow(mat[r][col], p - 2, p) if p > 2 else 1
        mat[r] = [(v * inv) % p for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col]:
                f = mat[i][col]
                mat[i] = [(a - f * b) % p for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    return tuple(tuple(row) for row in mat[:r]), tuple(pivots)


def rref_solve(p: int, rows: Sequence[Sequence[int]], b: Sequence[int]) -> tuple[int, ...] | None:
    """One solution of rows . x = b mod p, free variables set to 0; None if inconsistent."""
    if not rows:
        raise ValueError("empty system")
    ncols = len(rows[0])
    aug = [list(row) + [bi] for row, bi in zip(rows, b)]
    red, pivots = rref(p, aug)
    x = [0] * ncols
    for row, piv in zip(red, pivots):
        if piv == ncols:
            return None  # 0 = 1 row
        x[piv] = row[ncols]
    return tuple(x)


def nullspace(p: int, rows: Sequence[Sequence[int]], ncols: int) -> tuple[tuple[int, ...], ...]:
    """RREF basis of {x : rows . x = 0 mod p}."""
    red, pivots = rref(p, rows) if rows else ((), ())
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for j in free:
        v = [0] * ncols
        v[j] = 1
        for row, piv in zip(red, pivots):
            v[piv] = (-row[j]) % p
        basis.append(v)
    return rref(p, basis)[0] if basis else ()


# -- subspaces ---------------------------------------------------------------


@dataclass(frozen=True)
class PrimeSubspace:
    """Subspace of Z_p^n with an RREF basis (unique canonical form)."""

    p: int
    n: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"not a prime: {self.p}")
        canonical, _ = rref(self.p, self.rows) if self.rows else ((), ())
        if canonical != self.rows:
            raise ValueError("rows are not in canonical RREF; use from_vectors")

    @classmethod
    def from_vectors(cls, p: int, n: int, vectors: Sequence[Sequence[int]]) -> "PrimeSubspace":
        rows, _ = rref(p, vectors) if vectors else ((), ())
        return cls(p, n, rows)

    @classmethod
    def zero(cls, p: int, n: int) -> "PrimeSubspace":
        return cls(p, n, ())

    @classmethod
    def full(cls, p: int, n: int) -> "PrimeSubspace":
        return cls(p, n, tuple(tuple(1 if j == i else 0 for j in range(n)) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def size(self) -> int:
        return self.p**self.dim

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(j for j, c in enumerate(row) if c) for row in self.rows)

    def reduce(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Canonical coset representative: zero out the pivot coordinates."""
        v = [c % self.p for c in vec]
        for row, piv in zip(self.rows, self.pivots):
            f = v[piv]
            if f:
                v = [(a - f * b) % self.p for a, b in zip(v, row)]
        return tuple(v)

    def contains(self, vec: Sequence[int]) -> bool:
        return all(c == 0 for c in self.reduce(vec))

    def complement(self) -> "PrimeSubspace":
        return PrimeSubspace(self.p, self.n, nullspace(self.p, self.rows, self.n))

    def vectors(self) -> Iterator[tuple[int, ...]]:
        for coeffs in product(range(self.p), repeat=self.dim):
            v = [0] * self.n
            for c, row in zip(coeffs, self.rows):
                if c:
                    v = [(a + c * b) % self.p for a, b in zip(v, row)]
            yield tuple(v)

    def coset_reps(self) -> Iterator[tuple[int, ...]]:
        """All canonical representatives (free coordinates range, pivots zero)."""
        piv = set(self.pivots)
        free = [j for j in range(self.n) if j not in piv]
        if self.p ** len(free) > ENUMERATION_GUARD:
            raise EnumerationGuardError("too many cosets to enumerate")
        for vals in product(range(self.p), repeat=len(free)):
            v = [0] * self.n
            for j, c in zip(free, vals):
                v[j] = c
            yield tuple(v)


def random_subspace(p: int, n: int, d: int, rng) -> PrimeSubspace:
    """Span of d vectors drawn uniformly from Z_p^n, redrawing dependent draws."""
    if not 0 <= d <= n:
        raise ValueError(f"dimension {d} out of range for Z_{p}^{n}")
    kept: list[list[int]] = []
    draws = 0
    while len(kept) < d:
        draws += 1
        if draws > _MAX_REJECTION_DRAWS:
            raise RuntimeError("rejection sampling exceeded the retry cap")
        v = [int(c) for c in rng.integers(0, p, size=n)]
        rows, _ = rref(p, kept + [v])
        if len(rows) == len(kept) + 1:
            kept.append(v)
    return PrimeSubspace.from_vectors(p, n, kept)


def enumerate_subspaces(p: int, n: int, d: int) -> Iterator[PrimeSubspace]:
    """All subspaces of Z_p^n of dimension d, via canonical RREF matrices."""
    for pivots in combinations(range(n), d):
        free_slots = [(i, j) for i in range(d) for j in range(n)
                      if j > pivots[i] and j not in pivots]
        for vals in product(range(p), repeat=len(free_slots)):
            rows = [[0] * n for _ in range(d)]
            for i, piv in enumerate(pivots):
                rows[i][piv] = 1
            for (i, j), v in zip(free_slots, vals):
                rows[i][j] = v
            yield PrimeSubspace(p, n, tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class ProductSubspace:
    """One PrimeSubspace per factor of a GroupSpec."""

    spec: GroupSpec
    parts: tuple[PrimeSubspace, ...]

    def __post_init__(self):
        if len(self.parts) != len(self.spec.factors):
            raise ValueError("one subspace per factor required")
        for (p, n), part in zip(self.spec.factors, self.parts):
            if part.p != p or part.n != n:
                raise SpecMismatchError("subspace factor does not match the group factor")

    @classmethod
    def zero(cls, spec: GroupSpec) -> "ProductSubspace":
        return cls(spec, tuple(PrimeSubspace.zero(p, n) for p, n in spec.factors))

    @classmethod
    def full(cls, spec: GroupSpec) -> "ProductSubspace":
        return cls(spec, tuple(PrimeSubspace.full(p, n) for p, n in spec.factors))

    @classmethod
    def from_single(cls, spec: GroupSpec, part: PrimeSubspace) -> "ProductSubspace":
        if not spec.is_single_prime():
            raise SpecMismatchError("from_single requires a single-prime spec")
        return cls(spec, (part,))

    @property
    def size(self) -> int:
        return math.prod(part.size for part in self.parts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(part.dim for part in self.parts)

    def complement(self) -> "ProductSubspace":
        return ProductSubspace(self.spec, tuple(part.complement() for part in self.parts))

    def reduce(self, x: GroupElement) -> GroupElement:
        if x.spec != self.spec:
            raise SpecMismatchError("element bound to a different group")
        return GroupElement(self.spec, tuple(part.reduce(xs)
                                             for part, xs in zip(self.parts, x.coords)))

    def contains(self, x: GroupElement) -> bool:
        return self.reduce(x).is_zero()

    def elements(self) -> Iterator[GroupElement]:
        if self.size > ENUMERATION_GUARD:
            raise EnumerationGuardError("subspace too large to enumerate")
        for combo in product(*(part.vectors() for part in self.parts)):
            yield GroupElement(self.spec, tuple(combo))


@dataclass(frozen=True)
class Coset:
    """r + H for a ProductSubspace H; representative stored in canonical form."""

    subspace: ProductSubspace
    rep: GroupElement

    def __post_init__(self):
        if self.subspace.reduce(self.rep) != self.rep:
            raise ValueError("representative is not canonical; use Coset.of")

    @classmethod
    def of(cls, subspace: ProductSubspace, x: GroupElement) -> "Coset":
        return cls(subspace, subspace.reduce(x))

    def contains(self, x: GroupElement) -> bool:
        return self.subspace.reduce(x) == self.rep

    def elements(self) -> Iterator[GroupElement]:
        for h in self.subspace.elements():
            yield self.rep + h


def enumerate_cosets(h: ProductSubspace) -> list[Coset]:
    """All cosets of H, pairwise disjoint and covering the group."""
    spec = h.spec
    n_cosets = spec.order // h.size
    if n_cosets > ENUMERATION_GUARD:
        raise EnumerationGuardError(f"{n_cosets} cosets exceed the enumeration guard")
    out = []
    for combo in product(*(part.coset_reps() for part in h.parts)):
        out.append(Coset(h, GroupElement(spec, tuple(combo))))
    return out
