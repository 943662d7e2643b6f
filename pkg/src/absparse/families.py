"""Constructors for the named function families and random models."""

from __future__ import annotations

from dataclasses import dataclass

from .cyclotomic import CycRational, compare_real_to_rational
from .errors import SpecMismatchError
from .groups import GroupSpec, PrimeSubspace, ProductSubspace, dilate_element, enumerate_cosets
from .spectrum import DenseFunction, dft_fast, tail_top_s

__all__ = [
    "FamilyDescriptor",
    "threshold_univariate",
    "and_n",
    "at_function",
    "table1_z5sq",
    "dilate_function",
    "coset_constant_random",
    "random_function",
    "far_certificate",
    "is_far",
    "build_family",
    "FAMILY_NAMES",
]

FAMILY_NAMES = ("constant", "and", "threshold", "at", "table1", "coset_constant", "random")


@dataclass(frozen=True)
class FamilyDescriptor:
    """Validated recipe for a family member; `build_family` realises it."""

    family: str
    p: int | None = None
    n: int | None = None
    seed: int | None = None
    subspace_dim: int | None = None

    def __post_init__(self):
        if self.family not in FAMILY_NAMES:
            raise ValueError(f"unknown family {self.family!r}")


def threshold_univariate(p: int) -> DenseFunction:
    """+1 exactly on the upper half {(p+1)/2, ..., p-1} of Z_p; p odd."""
    if p == 2 or p < 3:
        raise ValueError("threshold function requires an odd prime p >= 3")
    spec = GroupSpec.single(p, 1)
    return DenseFunction(spec, tuple(1 if x >= (p + 1) // 2 else -1 for x in range(p)))


def and_n(n: int) -> DenseFunction:
    """-1 only at the all-ones point of Z_2^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = GroupSpec.single(2, n)
    last = spec.order - 1
    return DenseFunction(spec, tuple(-1 if i == last else 1 for i in range(spec.order)))


def at_function(p: int, n: int) -> DenseFunction:
    """Composition of the n-ary AND with per-coordinate thresholds on Z_p^n.

    -1 exactly where every coordinate is >= (p+1)/2.  Allowed for p = 3 as
    well, though the small-coefficient behaviour needs p >= 5.
    """
    if p == 2:
        raise ValueError("the composed family requires an odd prime")
    thr = (p + 1) // 2
    spec = GroupSpec.single(p, n)
    table = []
    for x in spec.elements():
        table.append(-1 if all(c >= thr for c in x.coords[0]) else 1)
    return DenseFunction(spec, tuple(table))


# Worked 25-point example on Z_5^2 with full sparsity 25 and an unusually
# small coefficient at chi_(1,0).  Rows are x1 = 0..4, columns x2 = 0..4.
_TABLE1_ROWS = (
    (-1, -1, -1, -1, -1),
    (+1, +1, +1, -1, -1),
    (+1, +1, +1, -1, -1),
    (-1, -1, -1, -1, -1),
    (+1, +1, +1, +1, +1),
)


def table1_z5sq() -> DenseFunction:
    spec = GroupSpec.single(5, 2)
    return DenseFunction(spec, tuple(v for row in _TABLE1_ROWS for v in row))


def dilate_function(f: DenseFunction, i: int) -> DenseFunction:
    """h(x) = f(i^{-1} x); the spectrum satisfies h_hat(chi_r) = f_hat(chi_{i r})."""
    spec = f.spec
    if not spec.is_single_prime():
        raise SpecMismatchError("dilation requires a single-prime group")
    table = [0] * spec.order
    for x in spec.elements():
        table[spec.lex_index(x)] = f.value_at(dilate_element(x, i))
    return DenseFunction(spec, tuple(table))


def coset_constant_random(spec: GroupSpec, k: PrimeSubspace, rng) -> DenseFunction:
    """Constant on each coset of K with independent uniform +-1 values.

    The spectrum support then lies in the complement of K (dimension
    n - dim K), which callers wanting a given support dimension use by
    passing a K of the matching codimension.
    """
    if not spec.is_single_prime():
        raise SpecMismatchError("coset-constant sampling requires a single-prime group")
    sub = ProductSubspace.from_single(spec, k)
    cosets = enumerate_cosets(sub)
    table = [0] * spec.order
    for coset in cosets:
        sign = 1 if rng.integers(0, 2) == 1 else -1
        for x in coset.elements():
            table[spec.lex_index(x)] = sign
    return DenseFunction(spec, tuple(table))


def random_function(spec: GroupSpec, rng) -> DenseFunction:
    """Independent uniform +-1 at every point."""
    draws = rng.integers(0, 2, size=spec.order)
    return DenseFunction(spec, tuple(1 if d else -1 for d in draws))


def far_certificate(f: DenseFunction, s: int) -> CycRational:
    """Exact tail weight mu after removing the s largest coefficients.

    mu >= eps certifies that f is eps-far from every s-sparse Boolean-valued
    function: the distance to the Boolean family is at least the distance to
    the best s-sparse complex approximation, whose square is exactly mu.
    """
    _, mu = tail_top_s(dft_fast(f), s)
    return mu


def is_far(f: DenseFunction, s: int, eps) -> bool:
    return compare_real_to_rational(far_certificate(f, s), eps) >= 0


def build_family(desc: FamilyDescriptor, rng=None) -> DenseFunction:
    fam = desc.family
    if fam == "constant":
        spec = GroupSpec.single(desc.p or 2, desc.n or 1)
        return DenseFunction(spec, (1,) * spec.order)
    if fam == "and":
        return and_n(desc.n or 2)
    if fam == "threshold":
        return threshold_univariate(desc.p or 5)
    if fam == "at":
        return at_function(desc.p or 5, desc.n or 2)
    if fam == "table1":
        return table1_z5sq()
    if fam == "coset_constant":
        if rng is None:
            raise ValueError("coset_constant requires an rng")
        p, n = desc.p or 3, desc.n or 3
        spec = GroupSpec.single(p, n)
        d = desc.subspace_dim if desc.subspace_dim is not None else max(n - 1, 0)
        from .groups import random_subspace

        k = random_subspace(p, n, d, rng)
        return coset_constant_random(spec, k, rng)
    if fam == "random":
        if rng is None:
            raise ValueError("random requires an rng")
        return random_function(GroupSpec.single(desc.p or 3, desc.n or 2), rng)
    raise ValueError(f"unknown family {fam!r}")
