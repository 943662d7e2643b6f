"""Exact arithmetic over products of prime cyclotomic fields.

Values live in Q(w_{p_1}, ..., w_{p_t}) for distinct primes p_i, where
w_p = exp(2*pi*i/p).  Ring elements are stored on the tensor power basis
prod_i {1, w_{p_i}, ..., w_{p_i}^{p_i - 2}}, obtained by reducing modulo each
cyclotomic polynomial Phi_p(X) = 1 + X + ... + X^{p-1}.  Coordinates on this
basis are unique, so zero tests, equality, and divisibility by p_i are exact
integer checks; that is what makes granularity decidable.

`CycRational` pairs a ring element with a positive denominator that factors
over the spec primes (the only denominators a Boolean spectrum can produce).
Comparisons of real values against rationals never go through floats: they
are decided by an exact zero test plus directed-rounding interval refinement.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath

__all__ = [
    "CycInt",
    "CycRational",
    "canonicalize",
    "conjugate",
    "multiply",
    "galois_norm",
    "galois_norm_product",
    "numeric_eval",
    "magnitude_squared",
    "is_granular",
    "nearest_granular",
    "compare_real_to_rational",
    "poly_l1",
    "format_value",
    "parse_value",
]

_PREC_LADDER = (64, 128, 256, 512, 1024, 2048, 4096, 8192)


@lru_cache(maxsize=None)
def _layout(primes: tuple[int, ...]):
    """(reduced dims, reduced size, reduced strides, full dims, full size, full strides)."""
    rdims = tuple(p - 1 for p in primes)
    fdims = tuple(primes)

    def strides(dims):
        out, acc = [], 1
        for d in reversed(dims):
            out.append(acc)
            acc *= d
        return tuple(reversed(out)), acc

    rstrides, rsize = strides(rdims)
    fstrides, fsize = strides(fdims)
    return rdims, rsize, rstrides, fdims, fsize, fstrides


def _check_primes(primes: tuple[int, ...]) -> None:
    seen = set()
    for p in primes:
        if p < 2 or any(p % q == 0 for q in range(2, int(math.isqrt(p)) + 1)):
            raise ValueError(f"not a prime: {p}")
        if p in seen:
            raise ValueError(f"duplicate prime: {p}")
        seen.add(p)


def _reduce_full(primes: tuple[int, ...], full: list[int]) -> tuple[int, ...]:
    """Fold exponent p-1 into the lower exponents, axis by axis.

    Uses w^(p-1) = -(1 + w + ... + w^(p-2)); linear, so axes are independent.
    """
    rdims, rsize, rstrides, fdims, fsize, fstrides = _layout(primes)
    for axis, p in enumerate(primes):
        stride = fstrides[axis]
        block = stride * p
        for base in range(0, fsize, block):
            for off in range(stride):
                top = full[base + (p - 1) * stride + off]
                if top:
                    for e in range(p - 1):
                        full[base + e * stride + off] -= top
                    full[base + (p - 1) * stride + off] = 0
    # gather the reduced sub-tensor (exponents < p-1 on every axis)
    out = [0] * rsize
    for ridx in range(rsize):
        rem, fidx = ridx, 0
        for axis in range(len(primes)):
            e = rem // rstrides[axis]
            rem %= rstrides[axis]
            fidx += e * fstrides[axis]
        out[ridx] = full[fidx]
    return tuple(out)


@dataclass(frozen=True)
class CycInt:
    """Element of Z[w_{p_1}, ..., w_{p_t}] on the reduced power basis."""

    primes: tuple[int, ...]
    coords: tuple[int, ...]

    def __post_init__(self):
        _check_primes(self.primes)
        if len(self.coords) != _layout(self.primes)[1]:
            raise ValueError("coordinate length does not match basis size")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, primes: Sequence[int]) -> "CycInt":
        primes = tuple(primes)
        return cls(primes, (0,) * _layout(primes)[1])

    @classmethod
    def from_int(cls, primes: Sequence[int], n: int) -> "CycInt":
        primes = tuple(primes)
        size = _layout(primes)[1]
        return cls(primes, (n,) + (0,) * (size - 1))

    @classmethod
    def monomial(cls, primes: Sequence[int], exps: Sequence[int], coeff: int = 1) -> "CycInt":
        """coeff * prod_i w_{p_i}^{exps_i}, exponents taken mod p_i."""
        primes = tuple(primes)
        fdims, fsize, fstrides = _layout(primes)[3:]
        full = [0] * fsize
        idx = sum((e % p) * s for e, p, s in zip(exps, primes, fstrides))
        full[idx] = coeff
        return cls(primes, _reduce_full(primes, full))

    @classmethod
    def from_exponent_counts(cls, primes: Sequence[int], counts: Sequence[int]) -> "CycInt":
        """Build from a full tensor of per-exponent integer counts (shape prod p_i)."""
        primes = tuple(primes)
        fsize = _layout(primes)[4]
        if len(counts) != fsize:
            raise ValueError("count length does not match full basis size")
        return cls(primes, _reduce_full(primes, list(counts)))

    # -- ring operations ----------------------------------------------

    def _require_same(self, other: "CycInt") -> None:
        if self.primes != other.primes:
            raise ValueError("cyclotomic spec mismatch")

    def __add__(self, other: "CycInt") -> "CycInt":
        self._require_same(other)
        return CycInt(self.primes, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "CycInt") -> "CycInt":
        self._require_same(other)
        return CycInt(self.primes, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "CycInt":
        return CycInt(self.primes, tuple(-a for a in self.coords))

    def scale(self, n: int) -> "CycInt":
        return CycInt(self.primes, tuple(n * a for a in self.coords))

    def __mul__(self, other: "CycInt") -> "CycInt":
        self._require_same(other)
        primes = self.primes
        rdims, rsize, rstrides, fdims, fsize, fstrides = _layout(primes)
        full = [0] * fsize
        t = len(primes)
        nz_a = [(i, c) for i, c in enumerate(self.coords) if c]
        nz_b = [(i, c) for i, c in enumerate(other.coords) if c]
        for ia, ca in nz_a:
            ea = []
            rem = ia
            for axis in range(t):
                ea.append(rem // rstrides[axis])
                rem %= rstrides[axis]
            for ib, cb in nz_b:
                rem = ib
                fidx = 0
                for axis in range(t):
                    eb = rem // rstrides[axis]
                    rem %= rstrides[axis]
                    fidx += ((ea[axis] + eb) % primes[axis]) * fstrides[axis]
                full[fidx] += ca * cb
        return CycInt(primes, _reduce_full(primes, full))

    def map_roots(self, js: Sequence[int]) -> "CycInt":
        """Apply the field automorphism w_{p_i} -> w_{p_i}^{j_i} (gcd(j_i, p_i) = 1)."""
        primes = self.primes
        rdims, rsize, rstrides, fdims, fsize, fstrides = _layout(primes)
        for j, p in zip(js, primes):
            if j % p == 0:
                raise ValueError("substitution exponent must be a unit")
        full = [0] * fsize
        t = len(primes)
        for i, c in enumerate(self.coords):
            if not c:
                continue
            rem, fidx = i, 0
            for axis in range(t):
                e = rem // rstrides[axis]
                rem %= rstrides[axis]
                fidx += ((e * js[axis]) % primes[axis]) * fstrides[axis]
            full[fidx] += c
        return CycInt(primes, _reduce_full(primes, full))

    def conjugate(self) -> "CycInt":
        return self.map_roots(tuple(p - 1 for p in self.primes))

    # -- predicates and views ------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    def rational_value(self) -> int:
        if not self.is_rational():
            raise ValueError("value is not rational")
        return self.coords[0]

    def coeff_abs_sum(self) -> int:
        return sum(abs(c) for c in self.coords)

    def _monomial_angles(self) -> tuple[Fraction, ...]:
        rdims, rsize, rstrides = _layout(self.primes)[:3]
        angles = []
        for i in range(rsize):
            rem, q = i, Fraction(0)
            for axis, p in enumerate(self.primes):
                e = rem // rstrides[axis]
                rem %= rstrides[axis]
                q += Fraction(e, p)
            angles.append(q)
        return tuple(angles)

    def to_complex(self) -> complex:
        mono = _monomials_complex(self.primes)
        return sum(c * mono[i] for i, c in enumerate(self.coords) if c)

    def real_imag_bounds(self, prec: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Rigorous (re_lo, re_hi, im_lo, im_hi) at the given binary precision."""
        angles = self._monomial_angles()
        with mpmath.workprec(prec):
            iv = mpmath.iv
            iv.prec = prec
            two_pi = 2 * iv.pi
            re = iv.mpf(0)
            im = iv.mpf(0)
            for i, c in enumerate(self.coords):
                if not c:
                    continue
                theta = two_pi * iv.mpf(angles[i].numerator) / angles[i].denominator
                re += c * iv.cos(theta)
                im += c * iv.sin(theta)
        return (_mpf_to_frac(re.a), _mpf_to_frac(re.b), _mpf_to_frac(im.a), _mpf_to_frac(im.b))


@lru_cache(maxsize=None)
def _monomials_complex(primes: tuple[int, ...]) -> tuple[complex, ...]:
    rdims, rsize, rstrides = _layout(primes)[:3]
    out = []
    for i in range(rsize):
        rem, z = i, 1 + 0j
        for axis, p in enumerate(primes):
            e = rem // rstrides[axis]
            rem %= rstrides[axis]
            z *= cmath.exp(2j * cmath.pi * e / p)
        out.append(z)
    return tuple(out)


def _mpf_to_frac(x) -> Fraction:
    sign, man, exp, bc = mpmath.mpf(x)._mpf_
    if man == 0 and exp == 0:
        return Fraction(0)
    if bc < 0 or man == 0:  # inf/nan guard; never expected here
        raise ArithmeticError("non-finite interval endpoint")
    v = Fraction(man, 1)
    v = v * Fraction(2) ** exp
    return -v if sign else v


def _factor_over(primes: tuple[int, ...], d: int) -> dict[int, int]:
    if d <= 0:
        raise ValueError("denominator must be positive")
    out = {}
    for p in primes:
        while d % p == 0:
            out[p] = out.get(p, 0) + 1
            d //= p
    if d != 1:
        raise ValueError("denominator has a factor outside the spec primes")
    return out


@dataclass(frozen=True)
class CycRational:
    """num / den with num in Z[w_{p_1}, ...] and den a product of spec primes.

    Normalised so that no p_i divides every numerator coordinate while its
    exponent in den is positive; the normal form is unique, so equality is
    field equality.
    """

    num: CycInt
    den: int

    def __post_init__(self):
        fac = _factor_over(self.num.primes, self.den)
        for p, e in fac.items():
            if e > 0 and all(c % p == 0 for c in self.num.coords):
                raise ValueError("not normalised; use CycRational.make")

    @classmethod
    def make(cls, num: CycInt, den: int = 1) -> "CycRational":
        fac = _factor_over(num.primes, den)
        coords = list(num.coords)
        d = den
        for p, e in fac.items():
            while e > 0 and all(c % p == 0 for c in coords):
                coords = [c // p for c in coords]
                d //= p
                e -= 1
        return cls(CycInt(num.primes, tuple(coords)), d)

    @classmethod
    def zero(cls, primes: Sequence[int]) -> "CycRational":
        return cls.make(CycInt.zero(primes))

    @classmethod
    def from_int(cls, primes: Sequence[int], n: int) -> "CycRational":
        return cls.make(CycInt.from_int(primes, n))

    @property
    def primes(self) -> tuple[int, ...]:
        return self.num.primes

    def _require_same(self, other: "CycRational") -> None:
        if self.primes != other.primes:
            raise ValueError("cyclotomic spec mismatch")

    def __add__(self, other: "CycRational") -> "CycRational":
        self._require_same(other)
        fa = _factor_over(self.primes, self.den)
        fb = _factor_over(self.primes, other.den)
        den = 1
        for p in self.primes:
            den *= p ** max(fa.get(p, 0), fb.get(p, 0))
        a = self.num.scale(den // self.den)
        b = other.num.scale(den // other.den)
        return CycRational.make(a + b, den)

    def __sub__(self, other: "CycRational") -> "CycRational":
        return self + (-other)

    def __neg__(self) -> "CycRational":
        return CycRational(-self.num, self.den)

    def __mul__(self, other: "CycRational") -> "CycRational":
        self._require_same(other)
        return CycRational.make(self.num * other.num, self.den * other.den)

    def scale_int(self, n: int) -> "CycRational":
        return CycRational.make(self.num.scale(n), self.den)

    def div_int(self, n: int) -> "CycRational":
        """Divide by a positive integer that factors over the spec primes."""
        return CycRational.make(self.num, self.den * n)

    def conjugate(self) -> "CycRational":
        return CycRational(self.num.conjugate(), self.den)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_rational(self) -> bool:
        return self.num.is_rational()

    def rational_value(self) -> Fraction:
        return Fraction(self.num.rational_value(), self.den)

    def is_real(self) -> bool:
        return self.conjugate() == self

    def to_complex(self) -> complex:
        return self.num.to_complex() / self.den

    def eval_radius(self) -> float:
        """Upper bound on |to_complex() - exact value| from rounding alone."""
        d = len(self.num.coords)
        return self.num.coeff_abs_sum() * (d + 8) * 2.3e-16 / self.den

    def real_bounds(self, prec: int) -> tuple[Fraction, Fraction]:
        re_lo, re_hi, _, _ = self.num.real_imag_bounds(prec)
        return re_lo / self.den, re_hi / self.den

    def abs2_bounds(self, prec: int) -> tuple[Fraction, Fraction]:
        """Rigorous enclosure of |value|^2 via the exact conj(v)*v."""
        sq = magnitude_squared(self)
        lo, hi = sq.real_bounds(prec)
        return max(lo, Fraction(0)), hi


# -- module-level operations (the documented surface) ----------------------


def canonicalize(primes: Sequence[int], coeffs) -> CycInt:
    """Reduce raw integer polynomial coefficients to the power basis.

    ``coeffs`` is either a flat list (single prime: coefficient of w^e at
    index e, any length) or a mapping {exponent tuple: int} for products.
    Exponents are first taken mod p_i (w_p^p = 1), then w^(p-1) is folded out.
    """
    primes = tuple(primes)
    fdims, fsize, fstrides = _layout(primes)[3:]
    full = [0] * fsize
    if isinstance(coeffs, dict):
        items = coeffs.items()
    else:
        if len(primes) != 1:
            raise ValueError("flat coefficient lists are for single-prime specs")
        items = (((e,), c) for e, c in enumerate(coeffs))
    for exps, c in items:
        if not c:
            continue
        idx = sum((e % p) * s for e, p, s in zip(exps, primes, fstrides))
        full[idx] += c
    return CycInt(primes, _reduce_full(primes, full))


def multiply(a: CycRational, b: CycRational) -> CycRational:
    return a * b


def conjugate(v: CycRational) -> CycRational:
    return v.conjugate()


def magnitude_squared(v: CycRational) -> CycRational:
    return v.conjugate() * v


def numeric_eval(v: CycRational) -> tuple[complex, float]:
    """Complex double approximation plus a rigorous rounding-error radius."""
    return v.to_complex(), v.eval_radius()


def galois_norm(v: CycInt) -> int:
    """Product of v over all root substitutions w_{p_i} -> w_{p_i}^{j_i}.

    The result is a rational integer; it is 0 iff v = 0, and otherwise has
    absolute value at least 1.
    """
    if v.is_zero():
        return 0
    primes = v.primes
    prod = CycInt.from_int(primes, 1)
    js = [1] * len(primes)

    def rec(axis: int):
        nonlocal prod
        if axis == len(primes):
            prod = prod * v.map_roots(js)
            return
        for j in range(1, primes[axis]):
            js[axis] = j
            rec(axis + 1)

    rec(0)
    return prod.rational_value()


def galois_norm_product(primes: Sequence[int], polys: Sequence[Sequence[int]]) -> int:
    """Norm of prod_i g_i(w_{p_i}) for integer polynomials g_i, one per prime."""
    primes = tuple(primes)
    if len(polys) != len(primes):
        raise ValueError("one polynomial per prime factor required")
    v = CycInt.from_int(primes, 1)
    for axis, poly in enumerate(polys):
        g = canonicalize(primes, {tuple(e if a == axis else 0 for a in range(len(primes))): c
                                  for e, c in enumerate(poly)})
        v = v * g
    return galois_norm(v)


def poly_l1(coeffs: Iterable[int]) -> int:
    """Sum of absolute values of raw polynomial coefficients (pre-reduction)."""
    return sum(abs(c) for c in coeffs)


def is_granular(v: CycRational, k: Sequence[int] | int) -> bool:
    """True iff v = g(w)/prod p_i^{k_i} for some integer polynomial g.

    Decided exactly: v * prod p_i^{k_i} must be a cyclotomic integer, i.e.
    each residual denominator prime power must divide every coordinate.
    Complete as well as sound because the tensor power basis is an integral
    basis here (the per-prime discriminants are coprime), so integer
    coordinates characterise the values an integer polynomial can produce.
    Zero is granular for every k.
    """
    primes = v.primes
    ks = (k,) * len(primes) if isinstance(k, int) else tuple(k)
    if len(ks) != len(primes):
        raise ValueError("one exponent per prime required")
    if any(e < 0 for e in ks):
        raise ValueError("granularity exponents must be nonnegative")
    den_fac = _factor_over(primes, v.den)
    for p, e in den_fac.items():
        need = e - ks[primes.index(p)]
        if need > 0:
            q = p**need
            if not all(c % q == 0 for c in v.num.coords):
                return False
    return True


def nearest_granular(v: CycRational, k: Sequence[int] | int) -> tuple[CycRational, Fraction]:
    """Round to a k-granular candidate; return it with a distance upper bound.

    Rounds each coordinate of (prod p_i^{k_i}) * v to the nearest integer
    (ties to even).  Since every basis monomial has modulus 1, the distance
    to the candidate is at most the sum of coordinate residuals; the bound is
    exact rational arithmetic, so "bound <= mu" certifies mu-closeness.
    One-sided: the candidate need not be the complex-nearest granular value.
    """
    primes = v.primes
    ks = (k,) * len(primes) if isinstance(k, int) else tuple(k)
    scale = 1
    for p, e in zip(primes, ks):
        if e < 0:
            raise ValueError("granularity exponents must be nonnegative")
        scale *= p**e
    resid = Fraction(0)
    rounded = []
    for c in v.num.coords:
        exact = Fraction(c * scale, v.den)
        g = _round_half_even(exact)
        rounded.append(g)
        resid += abs(exact - g)
    cand = CycRational.make(CycInt(primes, tuple(rounded)), scale)
    return cand, resid / scale


def _round_half_even(q: Fraction) -> int:
    fl = q.numerator // q.denominator
    rem2 = 2 * (q - fl)
    if rem2 > 1:
        return fl + 1
    if rem2 < 1:
        return fl
    return fl if fl % 2 == 0 else fl + 1


def compare_real_to_rational(v: CycRational, q: Fraction | int) -> int:
    """Exact sign of (v - q) for real v: -1, 0, or +1.

    Zero is decided from coordinates; a nonzero difference is signed by
    interval evaluation at increasing precision, which terminates because a
    nonzero algebraic number is bounded away from zero.
    """
    q = Fraction(q)
    w = v.scale_int(q.denominator) - CycRational.from_int(v.primes, q.numerator)
    if w.is_zero():
        return 0
    if w.is_rational():
        return 1 if w.rational_value() > 0 else -1
    if not w.is_real():
        raise ValueError("comparison requires a real value")
    for prec in _PREC_LADDER:
        lo, hi = w.real_bounds(prec)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
    raise ArithmeticError("interval refinement did not separate a nonzero value")


def compare_abs2(a: CycRational, b: CycRational) -> int:
    """Exact sign of |a|^2 - |b|^2."""
    diff = magnitude_squared(a) - magnitude_squared(b)
    return compare_real_to_rational(diff, 0)


# -- textual rendering -------------------------------------------------------


def _monomial_name(primes: tuple[int, ...], exps: Sequence[int]) -> str:
    parts = []
    for p, e in zip(primes, exps):
        if e == 1:
            parts.append(f"w{p}")
        elif e > 1:
            parts.append(f"w{p}^{e}")
    return "*".join(parts)


def format_value(v: CycRational) -> str:
    """Render as "(c0 + c1*w5 + ...)/d"; parse_value is the exact inverse."""
    primes = v.primes
    rdims, rsize, rstrides = _layout(primes)[:3]
    terms = []
    for i, c in enumerate(v.num.coords):
        if not c:
            continue
        rem = i
        exps = []
        for axis in range(len(primes)):
            exps.append(rem // rstrides[axis])
            rem %= rstrides[axis]
        name = _monomial_name(primes, exps)
        if name:
            mag = f"{abs(c)}*{name}" if abs(c) != 1 else name
        else:
            mag = str(abs(c))
        terms.append(("- " if c < 0 else "+ ") + mag)
    if not terms:
        body = "0"
    else:
        body = " ".join(terms)
        body = body[2:] if body.startswith("+ ") else "-" + body[2:]
    return f"({body})/{v.den}"


def parse_value(text: str, primes: Sequence[int]) -> CycRational:
    """Parse the format_value form (tolerant of whitespace)."""
    primes = tuple(primes)
    s = text.strip()
    if not (s.startswith("(") and "/" in s):
        raise ValueError(f"malformed cyclotomic literal: {text!r}")
    close = s.rindex(")")
    body = s[1:close].strip()
    den = int(s[close + 1 :].lstrip("/").strip())
    coeffs: dict[tuple[int, ...], int] = {}
    if body != "0":
        for chunk in body.replace("- ", "+ -").replace("-", " -").split("+"):
            chunk = chunk.strip().replace(" ", "")
            if not chunk:
                continue
            sign = 1
            while chunk.startswith("-"):
                sign = -sign
                chunk = chunk[1:]
            mag = 1
            exps = [0] * len(primes)
            for factor in chunk.split("*"):
                if not factor:
                    continue
                if factor.startswith("w"):
                    base, _, e = factor.partition("^")
                    p = int(base[1:])
                    if p not in primes:
                        raise ValueError(f"unknown root symbol w{p} in {text!r}")
                    exps[primes.index(p)] += int(e) if e else 1
                else:
                    mag *= int(factor)
            key = tuple(exps)
            coeffs[key] = coeffs.get(key, 0) + sign * mag
    return CycRational.make(canonicalize(primes, coeffs), den)
