"""Exact Fourier analysis of Boolean-valued functions on product groups.

The transform convention is f_hat(chi_r) = (1/|G|) * sum_x f(x) *
conj(chi_r(x)), so every coefficient is an exact `CycRational` with
denominator |G|.  Two independent routes compute it:

* `dft_exact` - a deliberately plain double loop over (r, x) with integer
  exponent counting.  It is the trusted oracle and shares no code with the
  fast path.
* `dft_fast` / `dft_kronecker` - staged butterflies on int64 exponent-count
  tensors (one stage per coordinate, monomial products realised as cyclic
  shifts), running on the compiled kernel when available.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from itertools import product
from typing import Callable, Iterator, Sequence

import numpy as np

from ._backend import butterfly_stage
from .cyclotomic import (
    CycInt,
    CycRational,
    compare_abs2,
    format_value,
    magnitude_squared,
    numeric_eval,
    parse_value,
)
from .errors import EnumerationGuardError, SpecMismatchError
from .groups import (
    Coset,
    GroupElement,
    GroupSpec,
    ProductSubspace,
    character_value,
    enumerate_subspaces,
    nullspace,
    rref,
    rref_solve,
)

DFT_EXACT_GUARD = 4096
# the affine sweep enumerates Gaussian-binomial many subspaces; desk scale only
DEG_GUARD = 256

__all__ = [
    "DenseFunction",
    "QueryOracle",
    "Spectrum",
    "dft_exact",
    "dft_fast",
    "dft_kronecker",
    "inverse_dft",
    "boolean_from_values",
    "min_coefficient",
    "tail_top_s",
    "project",
    "project_via_average",
    "bucket_weights",
    "l2_and_hamming",
    "restrict_affine",
    "deg_p",
    "dim_support",
    "spectrum_to_json",
    "spectrum_from_json",
]


@dataclass(frozen=True)
class DenseFunction:
    """Boolean-valued function as a +-1 table in lexicographic order."""

    spec: GroupSpec
    table: tuple[int, ...]

    def __post_init__(self):
        if len(self.table) != self.spec.order:
            raise ValueError("table length must equal the group order")
        if any(v not in (-1, 1) for v in self.table):
            raise ValueError("table entries must be +1 or -1")

    @classmethod
    def from_callable(cls, spec: GroupSpec, fn: Callable[[GroupElement], int]) -> "DenseFunction":
        return cls(spec, tuple(fn(x) for x in spec.elements()))

    def value_at(self, x: GroupElement) -> int:
        return self.table[self.spec.lex_index(x)]

    def as_array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.int64)

    def as_oracle(self) -> "QueryOracle":
        table = self.table
        return QueryOracle(self.spec, lambda i: table[i], table=self.as_array())

    def pointwise_product(self, other: "DenseFunction") -> "DenseFunction":
        if other.spec != self.spec:
            raise SpecMismatchError("functions on different groups")
        return DenseFunction(self.spec, tuple(a * b for a, b in zip(self.table, other.table)))


class QueryOracle:
    """Query access to a +-1 function with a thread-safe monotone counter."""

    def __init__(self, spec: GroupSpec, fn_index: Callable[[int], int],
                 table: np.ndarray | None = None):
        self.spec = spec
        self._fn = fn_index
        self._table = table
        self._count = 0
        self._lock = threading.Lock()

    def eval_index(self, i: int) -> int:
        with self._lock:
            self._count += 1
        return self._fn(i)

    def eval_indices(self, indices) -> np.ndarray:
        """Batch evaluation; the counter advances once per point queried."""
        idx = np.asarray(indices)
        with self._lock:
            self._count += idx.size
        if self._table is not None:
            return np.take(self._table, idx)
        return np.array([self._fn(int(i)) for i in idx], dtype=np.int64)

    def eval(self, x: GroupElement) -> int:
        return self.eval_index(self.spec.lex_index(x))

    @property
    def queries(self) -> int:
        return self._count


class Spectrum:
    """Exact Fourier coefficients, zero entries omitted."""

    def __init__(self, spec: GroupSpec, coeffs: dict[int, CycRational]):
        self.spec = spec
        self._coeffs = {r: c for r, c in sorted(coeffs.items()) if not c.is_zero()}

    @property
    def sparsity(self) -> int:
        return len(self._coeffs)

    def support_indices(self) -> tuple[int, ...]:
        return tuple(self._coeffs)

    def support_elements(self) -> list[GroupElement]:
        return [self.spec.from_index(r) for r in self._coeffs]

    def coeff_index(self, r: int) -> CycRational:
        return self._coeffs.get(r, CycRational.zero(self.spec.primes))

    def coeff(self, r: GroupElement) -> CycRational:
        return self.coeff_index(self.spec.lex_index(r))

    def items(self) -> Iterator[tuple[int, CycRational]]:
        return iter(self._coeffs.items())

    def parseval_sum(self) -> CycRational:
        total = CycRational.zero(self.spec.primes)
        for c in self._coeffs.values():
            total = total + magnitude_squared(c)
        return total

    def __eq__(self, other) -> bool:
        return (isinstance(other, Spectrum) and other.spec == self.spec
                and other._coeffs == self._coeffs)


# -- factor index plumbing ----------------------------------------------------


@lru_cache(maxsize=None)
def _factor_coords(p: int, n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(product(range(p), repeat=n))


@lru_cache(maxsize=None)
def _index_decomp(spec: GroupSpec) -> tuple[tuple[int, ...], ...]:
    """Flat lex index -> per-factor local indices."""
    sizes = spec.factor_sizes
    out = []
    for i in range(spec.order):
        loc = []
        rem = i
        for s in reversed(sizes):
            loc.append(rem % s)
            rem //= s
        out.append(tuple(reversed(loc)))
    return tuple(out)


@lru_cache(maxsize=None)
def _full_strides(primes: tuple[int, ...]) -> tuple[int, ...]:
    out, acc = [], 1
    for p in reversed(primes):
        out.append(acc)
        acc *= p
    return tuple(reversed(out))


def dft_exact(f: DenseFunction) -> Spectrum:
    """Reference transform: plain integer double loop, no shared fast-path code."""
    spec = f.spec
    n_pts = spec.order
    if n_pts > DFT_EXACT_GUARD:
        raise EnumerationGuardError(f"group order {n_pts} exceeds the exact-DFT guard")
    primes = spec.primes
    t = spec.num_factors
    fac_coords = [_factor_coords(p, n) for p, n in spec.factors]
    decomp = _index_decomp(spec)
    fstrides = _full_strides(primes)
    full_size = math.prod(primes)
    table = f.table
    coeffs: dict[int, CycRational] = {}
    for r in range(n_pts):
        rloc = decomp[r]
        rcs = [fac_coords[i][rloc[i]] for i in range(t)]
        counts = [0] * full_size
        for x in range(n_pts):
            xloc = decomp[x]
            fidx = 0
            for i in range(t):
                rc = rcs[i]
                xc = fac_coords[i][xloc[i]]
                d = 0
                for a in range(len(rc)):
                    d += rc[a] * xc[a]
                fidx += ((-d) % primes[i]) * fstrides[i]
            counts[fidx] += table[x]
        num = CycInt.from_exponent_counts(primes, counts)
        if not num.is_zero():
            coeffs[r] = CycRational.make(num, n_pts)
    return Spectrum(spec, coeffs)


def dft_fast(f: DenseFunction) -> Spectrum:
    """Butterfly transform: one stage per coordinate, exact int64 tensors."""
    spec = f.spec
    n_pts = spec.order
    primes = spec.primes
    e_size = math.prod(primes)
    w = np.zeros((n_pts, e_size), dtype=np.int64)
    w[:, 0] = f.as_array()

    radices = [p for (p, n) in spec.factors for _ in range(n)]
    digit_factor = [i for i, (p, n) in enumerate(spec.factors) for _ in range(n)]
    for q, p in enumerate(radices):
        i = digit_factor[q]
        a_sz = math.prod(radices[:q]) if q else 1
        b_sz = math.prod(radices[q + 1 :]) if q + 1 < len(radices) else 1
        e_pre = math.prod(primes[:i]) if i else 1
        e_post = math.prod(primes[i + 1 :]) if i + 1 < len(primes) else 1
        v = w.reshape(a_sz, p, b_sz, e_pre, p, e_post)
        v = np.moveaxis(v, 4, 5)
        v = np.ascontiguousarray(v.reshape(a_sz, p, b_sz * e_pre * e_post, p))
        v = butterfly_stage(v, p, -1)
        v = v.reshape(a_sz, p, b_sz, e_pre, e_post, p)
        v = np.moveaxis(v, 5, 4)
        w = np.ascontiguousarray(v.reshape(n_pts, e_size))

    reduced = w.reshape((n_pts,) + tuple(primes))
    for ax, p in enumerate(primes):
        lead = (slice(None),) * (ax + 1)
        reduced = reduced[lead + (slice(0, p - 1),)] - reduced[lead + (slice(p - 1, p),)]
    reduced = reduced.reshape(n_pts, -1)

    coeffs: dict[int, CycRational] = {}
    for r in range(n_pts):
        row = reduced[r]
        if row.any():
            num = CycInt(primes, tuple(int(v) for v in row))
            coeffs[r] = CycRational.make(num, n_pts)
    return Spectrum(spec, coeffs)


def dft_kronecker(f: DenseFunction) -> Spectrum:
    """Single-prime staged transform (identical output to dft_exact)."""
    if not f.spec.is_single_prime():
        raise SpecMismatchError("dft_kronecker requires a single-prime group")
    return dft_fast(f)


def inverse_dft(s: Spectrum) -> list[CycRational]:
    """f(x) = sum_r f_hat(r) chi_r(x), exact, in lexicographic order."""
    spec = s.spec
    items = [(spec.from_index(r), c) for r, c in s.items()]
    out = []
    for x in spec.elements():
        acc = CycRational.zero(spec.primes)
        for r, c in items:
            acc = acc + c * character_value(r, x)
        out.append(acc)
    return out


def boolean_from_values(spec: GroupSpec, values: Sequence[CycRational]) -> DenseFunction:
    """Rebuild a +-1 table from exact values; raises if any value is not +-1."""
    table = []
    for v in values:
        if v == CycRational.from_int(spec.primes, 1):
            table.append(1)
        elif v == CycRational.from_int(spec.primes, -1):
            table.append(-1)
        else:
            raise ValueError("value is not exactly +1 or -1")
    return DenseFunction(spec, tuple(table))


def min_coefficient(s: Spectrum) -> tuple[int, CycRational]:
    """Support index and value of the smallest-magnitude coefficient."""
    best = None
    for r, c in s.items():
        if best is None or compare_abs2(c, best[1]) < 0:
            best = (r, c)
    if best is None:
        raise ValueError("empty spectrum")
    return best


def tail_top_s(s: Spectrum, top: int) -> tuple[list[int], CycRational]:
    """Indices of the `top` largest coefficients (exact |.|^2 order, ties by
    ascending lex index) and the exact tail weight 1 - sum_B |f_hat|^2."""
    if top < 1:
        raise ValueError("top must be >= 1")
    entries = list(s.items())

    def cmp(a, b):
        sign = compare_abs2(b[1], a[1])  # descending magnitude
        if sign:
            return sign
        return -1 if a[0] < b[0] else (1 if a[0] > b[0] else 0)

    entries.sort(key=cmp_to_key(cmp))
    chosen = entries[:top]
    kept = CycRational.zero(s.spec.primes)
    for _, c in chosen:
        kept = kept + magnitude_squared(c)
    mu = CycRational.from_int(s.spec.primes, 1) - kept
    return [r for r, _ in chosen], mu


def project(s: Spectrum, coset: Coset) -> Spectrum:
    """Zero all coefficients outside the coset (of the dual group); idempotent."""
    if coset.subspace.spec != s.spec:
        raise SpecMismatchError("coset bound to a different group")
    spec = s.spec
    kept = {r: c for r, c in s.items() if coset.contains(spec.from_index(r))}
    return Spectrum(spec, kept)


def project_via_average(f: DenseFunction, r: GroupElement, h: ProductSubspace) -> list[CycRational]:
    """Coset average form of the projection: E_{z in H_perp}[f(x-z) chi_r(z)]."""
    if h.spec != f.spec or r.spec != f.spec:
        raise SpecMismatchError("operands bound to different groups")
    spec = f.spec
    hperp = h.complement()
    zs = [(z, character_value(r, z)) for z in hperp.elements()]
    size = len(zs)
    out = []
    for x in spec.elements():
        acc = CycRational.zero(spec.primes)
        for z, chi in zs:
            acc = acc + chi.scale_int(f.value_at(x - z))
        out.append(acc.div_int(size))
    return out


def bucket_weights(s: Spectrum, h: ProductSubspace) -> dict[Coset, CycRational]:
    """Exact coefficient weight per coset of H_perp (zero-weight cosets omitted)."""
    if h.spec != s.spec:
        raise SpecMismatchError("subspace bound to a different group")
    hperp = h.complement()
    acc: dict[Coset, CycRational] = {}
    for r, c in s.items():
        coset = Coset.of(hperp, s.spec.from_index(r))
        w = magnitude_squared(c)
        acc[coset] = acc[coset] + w if coset in acc else w
    return acc


def l2_and_hamming(f: DenseFunction, g: DenseFunction) -> tuple[Fraction, Fraction]:
    """(squared l2 distance, disagreement probability); the first is 4x the second."""
    if f.spec != g.spec:
        raise SpecMismatchError("functions on different groups")
    disagreements = sum(1 for a, b in zip(f.table, g.table) if a != b)
    n_pts = f.spec.order
    return Fraction(4 * disagreements, n_pts), Fraction(disagreements, n_pts)


def restrict_affine(f: DenseFunction, rows: Sequence[Sequence[int]], b: Sequence[int]) -> DenseFunction:
    """Restrict to {x : rows . x = b}, reindexed over Z_p^{n - rank}.

    Points are x0 + sum y_i N_i with x0 the free-variables-zero solution and
    N the RREF nullspace basis, y in lexicographic order.
    """
    if not f.spec.is_single_prime():
        raise SpecMismatchError("affine restriction requires a single-prime group")
    p, n = f.spec.factors[0]
    x0 = rref_solve(p, rows, b)
    if x0 is None:
        raise ValueError("inconsistent linear system")
    basis = nullspace(p, rows, n)
    if not basis:
        raise ValueError("restriction has dimension 0 (a single point)")
    sub_spec = GroupSpec.single(p, len(basis))
    table = []
    for y in product(range(p), repeat=len(basis)):
        x = list(x0)
        for c, row in zip(y, basis):
            if c:
                x = [(a + c * v) % p for a, v in zip(x, row)]
        table.append(f.table[f.spec.lex_index(f.spec.element((x,)))])
    return DenseFunction(sub_spec, tuple(table))


def deg_p(f: DenseFunction) -> int:
    """Largest dimension of an affine subspace whose restriction has full
    sparsity; descending search with early exit, at least 0."""
    if not f.spec.is_single_prime():
        raise SpecMismatchError("deg_p requires a single-prime group")
    p, n = f.spec.factors[0]
    if p**n > DEG_GUARD:
        raise EnumerationGuardError("group too large for the exhaustive degree search")
    if dft_fast(f).sparsity == p**n:
        return n
    for ell in range(n - 1, 0, -1):
        k = n - ell
        target = p**ell
        for row_space in enumerate_subspaces(p, n, k):
            for b in product(range(p), repeat=k):
                sub = restrict_affine(f, row_space.rows, b)
                if dft_fast(sub).sparsity == target:
                    return ell
    return 0  # point restrictions always have sparsity 1 = p^0


def dim_support(s: Spectrum) -> int:
    """Rank over Z_p of the Fourier support index vectors."""
    if not s.spec.is_single_prime():
        raise SpecMismatchError("dim_support requires a single-prime group")
    p, n = s.spec.factors[0]
    vectors = [list(s.spec.from_index(r).coords[0]) for r in s.support_indices()]
    if not vectors:
        return 0
    return len(rref(p, vectors)[0])


# -- serialization ------------------------------------------------------------


def spectrum_to_json(s: Spectrum) -> dict:
    entries = []
    for r, c in s.items():
        elem = s.spec.from_index(r)
        z, rad = numeric_eval(c)
        entries.append({
            "r": [list(block) for block in elem.coords],
            "coeff": format_value(c),
            "abs": abs(z),
            "abs_err": rad,
        })
    return {"factors": [list(fac) for fac in s.spec.factors], "entries": entries}


def spectrum_from_json(data: dict) -> Spectrum:
    spec = GroupSpec(tuple((int(p), int(n)) for p, n in data["factors"]))
    coeffs = {}
    for entry in data["entries"]:
        elem = spec.element([tuple(map(int, block)) for block in entry["r"]])
        coeffs[spec.lex_index(elem)] = parse_value(entry["coeff"], spec.primes)
    return Spectrum(spec, coeffs)
