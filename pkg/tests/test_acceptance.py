"""Acceptance suite: each numbered check runs at its stated tolerance and
prints one pass/fail line (run with -s or -rA to see them)."""

import math
import time
from fractions import Fraction
from itertools import product

import pytest

from absparse.cyclotomic import (
    compare_real_to_rational,
    is_granular,
    magnitude_squared,
    numeric_eval,
    parse_value,
)
from absparse.groups import GroupSpec, PrimeSubspace, random_subspace
from absparse.families import (
    and_n,
    coset_constant_random,
    far_certificate,
    random_function,
    table1_z5sq,
)
from absparse.spectrum import (
    Coset,
    DenseFunction,
    ProductSubspace,
    deg_p,
    dft_exact,
    dft_fast,
    dft_kronecker,
    dim_support,
    inverse_dft,
    project,
    project_via_average,
)
from absparse.checks import check_small_coefficient_family, stat_bucket_properties, \
    stat_estimator_concentration, granularity_exponents
from absparse.tester import derive_params, estimator_expectation_exact, run_exact

from conftest import make_rng


class _Budget:
    def __init__(self, name: str, seconds: float):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[acceptance] {self.name}: {status} ({elapsed:.2f}s < {self.seconds:g}s)")
        if exc_type is None:
            assert elapsed < self.seconds, f"{self.name} exceeded its runtime budget"
        return False


def all_functions(spec):
    for signs in product((1, -1), repeat=spec.order):
        yield DenseFunction(spec, signs)


def test_c01_table1_exact_spectrum():
    with _Budget("C1 table1 exact spectrum", 1.0):
        f = table1_z5sq()
        s = dft_exact(f)
        assert s.sparsity == 25
        c = s.coeff(f.spec.element([(1, 0)]))
        assert c == parse_value("(-5 + 5*w5 - 5*w5^2 + w5^3 + w5^4)/25", (5,))
        z, rad = numeric_eval(c)
        assert rad < 1e-13
        assert 0.0115 <= abs(z) <= 0.0118


def test_c02_and_n_coefficients():
    with _Budget("C2 AND_n coefficients (n = 2..6)", 1.0):
        for n in range(2, 7):
            s = dft_kronecker(and_n(n))
            assert s.sparsity == 2**n
            assert s.coeff_index(0).rational_value() == 1 - Fraction(1, 2 ** (n - 1))
            for r, c in s.items():
                if r:
                    assert abs(c.rational_value()) == Fraction(1, 2 ** (n - 1))
        # n = 1 is degenerate: the constant coefficient 1 - 1/2^0 vanishes,
        # so the sparsity drops to 1 while the coefficient values still hold.
        s1 = dft_kronecker(and_n(1))
        assert s1.coeff_index(0).is_zero()
        assert s1.coeff_index(1).rational_value() == 1
        assert s1.sparsity == 1


def test_c03_at_family_small_coefficient():
    with _Budget("C3 AT(5,2) coefficient formula and exponent", 5.0):
        report = check_small_coefficient_family(5, 2)
        assert report.verdict == "pass"
        assert report.numerics["formula_match_1e12"]  # interval precision 1e-12
        assert report.numerics["realized_exponent"] > 1
        # the (2,2) coefficient is the minimum, so the realized exponent and
        # the closed form coincide
        assert report.numerics["realized_exponent"] == pytest.approx(
            report.numerics["closed_form_c"], abs=1e-9)


@pytest.mark.xfail(
    strict=True,
    reason="the quoted decimal 1.265 mixes log bases: the closed form "
           "log_5|2cos(pi/5)| + 1 - (1/2)log_5 2 evaluates to 1.0837, and "
           "reproducing 1.265 requires ln in place of log_5 in the first term",
)
def test_c03_closed_form_c_quoted_decimal():
    c = math.log(2 * math.cos(math.pi / 5), 5) + 1 - Fraction(1, 2) * math.log(2, 5)
    print(f"[acceptance] C3 closed-form c quoted as 1.265: FAIL "
          f"(closed form = {c:.4f}; expected failure)")
    assert abs(c - 1.265) < 1e-3


def test_c04_min_coefficient_bound_exhaustive():
    with _Budget("C4 coefficient lower bound, exhaustive Z_3^2 and Z_2^3", 120.0):
        for spec in (GroupSpec.single(3, 2), GroupSpec.single(2, 3)):
            p = spec.primes[0]
            for f in all_functions(spec):
                s = dft_fast(f)
                if not s.sparsity:
                    continue  # unreachable for +-1 tables; Parseval forbids it
                bound_sq = Fraction(1, (p * p * s.sparsity) ** (2 * ((p - 1 + 1) // 2)))
                for _, c in s.items():
                    assert compare_real_to_rational(magnitude_squared(c), bound_sq) >= 0


def test_c05_granularity_exhaustive():
    with _Budget("C5 exact granularity, exhaustive Z_3^2 and Z_2^3", 120.0):
        for spec in (GroupSpec.single(3, 2), GroupSpec.single(2, 3)):
            for f in all_functions(spec):
                s = dft_fast(f)
                ks = granularity_exponents(spec, max(s.sparsity, 1))
                for _, c in s.items():
                    assert is_granular(c, ks)


def test_c06_projection_identity():
    with _Budget("C6 projection identity on 100 random triples", 30.0):
        spec = GroupSpec.single(3, 2)
        rng = make_rng(600)
        for _ in range(100):
            f = random_function(spec, rng)
            h = ProductSubspace.from_single(
                spec, random_subspace(3, 2, int(rng.integers(0, 3)), rng))
            r = spec.from_index(int(rng.integers(0, 9)))
            assert project_via_average(f, r, h) == \
                inverse_dft(project(dft_exact(f), Coset.of(h, r)))


def test_c07_kronecker_oracle_equivalence_and_speed():
    with _Budget("C7 Kronecker transform equivalence and speedup", 120.0):
        for p, n in ((2, 3), (3, 3), (5, 2)):
            spec = GroupSpec.single(p, n)
            rng = make_rng(700 + p)
            for _ in range(200):
                f = random_function(spec, rng)
                assert dft_kronecker(f) == dft_exact(f)
        # benchmark at Z_3^5
        spec = GroupSpec.single(3, 5)
        f = random_function(spec, make_rng(701))
        t_exact = min(_timed(dft_exact, f) for _ in range(3))
        t_kron = min(_timed(dft_kronecker, f) for _ in range(3))
        assert dft_kronecker(f) == dft_exact(f)
        assert t_exact / t_kron >= 5.0
        print(f"[acceptance] C7 speedup at Z_3^5: {t_exact / t_kron:.1f}x")


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def test_c08_estimator_expectation_identity():
    with _Budget("C8 estimator expectation identity (exhaustive)", 10.0):
        spec = GroupSpec.single(3, 2)
        for seed, t in ((0, 1), (1, 1), (2, 2)):
            rng = make_rng(800 + seed)
            f = random_function(spec, rng)
            params = derive_params(spec, 1, Fraction(1, 2), override_t=t)
            _, _, rows = estimator_expectation_exact(f, params, rng)
            assert len(rows) == 3**t
            assert all(equal for _, _, _, equal in rows)


def test_c09_completeness_exact_backend():
    with _Budget("C9 completeness on sparse inputs (100 seeds each)", 60.0):
        cases = []
        spec23 = GroupSpec.single(2, 3)
        dictator = DenseFunction(spec23, tuple(1 if i < 4 else -1 for i in range(8)))
        and2_lifted = DenseFunction(spec23, tuple(and_n(2).table[i // 2] for i in range(8)))
        cases.append((dictator, 1))
        cases.append((dictator, 2))
        cases.append((and2_lifted, 4))
        spec33 = GroupSpec.single(3, 3)
        const3 = DenseFunction(spec33, (1,) * 27)
        k = PrimeSubspace.from_vectors(3, 3, [(0, 1, 0), (0, 0, 1)])
        sparse3 = coset_constant_random(spec33, k, make_rng(900))
        cases.append((const3, 1))
        cases.append((const3, 2))
        cases.append((sparse3, 4))
        for f, s in cases:
            assert dft_fast(f).sparsity <= s
            params = derive_params(f.spec, s, Fraction(1, 2))
            for seed in range(100):
                assert run_exact(f, params, make_rng(seed)).decision == "YES"


def test_c10_soundness_exact_backend():
    with _Budget("C10 soundness on certified-far inputs (100 seeds)", 300.0):
        spec = GroupSpec.single(3, 4)
        s = 2
        eps = Fraction(1, 8 * (9 * s) ** 2)  # hypothesis regime 1/(8 (p^2 s)^(p-1))
        params = derive_params(spec, s, eps)
        no = 0
        for seed in range(100):
            rng = make_rng(1000 + seed)
            f = random_function(spec, rng)
            mu = far_certificate(f, s)
            assert compare_real_to_rational(mu, eps) >= 0  # certified far
            if run_exact(f, params, rng).decision == "NO":
                no += 1
        print(f"[acceptance] C10 NO count: {no}/100")
        assert no >= 85


def test_c11_bucket_statistics():
    with _Budget("C11 bucket statistics and estimator concentration", 300.0):
        rng = make_rng(1100)
        report = stat_bucket_properties(GroupSpec.single(3, 6), 2, 100000, rng)
        assert report.verdict == "pass"
        mem = report.numerics["membership"]
        assert abs(mem["freq"] - 1 / 9) <= 3 * mem["sigma"]
        for case in ("scalar_multiple", "independent"):
            cov = report.numerics[f"covariance_{case}"]
            assert abs(cov["cov"]) <= 3 * cov["se"]
        f = random_function(GroupSpec.single(3, 3), make_rng(1101))
        # 1200 runs x 9 buckets puts the exceedance sample above 10^4 events
        conc = stat_estimator_concentration(f, 2, Fraction(1, 10), 1200, make_rng(1102))
        assert conc.verdict == "pass"
        assert conc.numerics["rate"] <= conc.numerics["delta"] + 3 * conc.numerics["sigma"]


def test_c12_norm_product_integrality():
    with _Budget("C12 norm products of 10^4 random polynomials per prime", 60.0):
        from absparse.cyclotomic import canonicalize, galois_norm_product

        rng = make_rng(1200)
        for p in (3, 5, 7):
            for _ in range(10000):
                coeffs = [int(c) for c in rng.integers(-9, 10, size=p - 1)]
                if canonicalize((p,), coeffs).is_zero():
                    continue
                norm = galois_norm_product((p,), [coeffs])
                assert isinstance(norm, int)
                assert abs(norm) >= 1


def test_c13_dilation_identity():
    with _Budget("C13 dilation spectrum identity on 100 random inputs", 30.0):
        from absparse.families import dilate_function

        for spec in (GroupSpec.single(5, 1), GroupSpec.single(3, 2)):
            p = spec.primes[0]
            rng = make_rng(1300 + p)
            for _ in range(100):
                f = random_function(spec, rng)
                s_f = dft_fast(f)
                for i in range(1, p):
                    s_h = dft_fast(dilate_function(f, i))
                    assert s_h.sparsity == s_f.sparsity
                    for r in spec.elements():
                        assert s_h.coeff(r) == s_f.coeff(r.scale(i))


def test_c14_degree_sandwich_exhaustive():
    with _Budget("C14 dimension/sparsity/degree sandwich, exhaustive", 180.0):
        for spec in (GroupSpec.single(3, 2), GroupSpec.single(2, 3)):
            p = spec.primes[0]
            for f in all_functions(spec):
                s = dft_fast(f)
                assert p ** dim_support(s) >= s.sparsity >= p ** deg_p(f)
