import math
from fractions import Fraction

import pytest

from absparse.cyclotomic import CycInt
from absparse.groups import GroupSpec, PrimeSubspace
from absparse.families import coset_constant_random, random_function
from absparse.spectrum import DenseFunction, dft_fast
from absparse.tester import (
    derive_params,
    estimate_all_buckets_fast,
    estimator_expectation_exact,
    naive_bucket_numerators,
    run_exact,
    run_sampling,
)

from conftest import make_rng


class TestDeriveParams:
    def test_single_prime_example(self):
        spec = GroupSpec.single(3, 4)
        p = derive_params(spec, 2, Fraction(1, 2))
        assert p.t_list == (5,)
        assert p.t_draw == (4,)  # capped at the ambient dimension
        assert p.tau == Fraction(1, 4) / 9720
        assert p.tau == min(Fraction(1, 4) / (40 * 3**5), Fraction(1, 324))

    def test_m_formula(self):
        spec = GroupSpec.single(3, 4)
        p = derive_params(spec, 2, Fraction(1, 2))
        expected = math.ceil(4 / float(p.tau) ** 2 * math.log(40 * 3**5))
        assert abs(p.m_samples - expected) <= 1
        assert 5.4e10 < p.m_samples < 5.7e10

    def test_multi_prime_example(self):
        spec = GroupSpec(((2, 2), (3, 2)))
        p = derive_params(spec, 4, Fraction(1, 2))
        assert p.t_list == (8, 5)
        # second tau branch: 1/(m^2 s)^phi(m) with m=6, phi=2, s=4
        assert Fraction(1, (36 * 4) ** 2) == Fraction(1, 20736)

    def test_second_branch_selected(self):
        spec = GroupSpec.single(3, 2)
        p = derive_params(spec, 1, Fraction(2))
        assert p.tau == min(Fraction(4, 40 * 3 ** p.t_list[0]), Fraction(1, 81))

    def test_overrides_flagged(self):
        spec = GroupSpec.single(3, 3)
        p = derive_params(spec, 1, Fraction(1, 2), override_t=2,
                          override_tau=Fraction(1, 10), override_m=500)
        assert set(p.overrides) == {"t", "tau", "M"}
        assert p.t_list == (2,) and p.tau == Fraction(1, 10) and p.m_samples == 500

    def test_domain_errors(self):
        spec = GroupSpec.single(3, 2)
        with pytest.raises(ValueError):
            derive_params(spec, 0, Fraction(1, 2))
        with pytest.raises(ValueError):
            derive_params(spec, 1, Fraction(3))
        with pytest.raises(ValueError):
            derive_params(spec, 1, 0)


class TestExactBackend:
    def test_constant_always_yes(self):
        spec = GroupSpec.single(3, 3)
        f = DenseFunction(spec, (1,) * 27)
        params = derive_params(spec, 1, Fraction(1, 2))
        for seed in range(25):
            report = run_exact(f, params, make_rng(seed))
            assert report.decision == "YES"
            assert report.heavy_count <= 1
            assert report.queries == 27

    def test_sparse_input_bounded_buckets(self):
        spec = GroupSpec.single(2, 4)
        # 4-sparse: AND_2 lifted over two idle coordinates
        from absparse.families import and_n

        base = and_n(2)
        table = tuple(base.table[i // 4] for i in range(16))
        f = DenseFunction(spec, table)
        assert dft_fast(f).sparsity == 4
        params = derive_params(spec, 4, Fraction(1, 2))
        for seed in range(25):
            assert run_exact(f, params, make_rng(seed)).decision == "YES"

    def test_far_input_rejected(self):
        spec = GroupSpec.single(3, 4)
        eps = Fraction(1, 2592)  # = 1/(8 (9*2)^2), the soundness regime for s=2
        params = derive_params(spec, 2, eps)
        f = random_function(spec, make_rng(7))
        no = sum(run_exact(f, params, make_rng(seed)).decision == "NO"
                 for seed in range(20))
        assert no == 20

    def test_report_schema(self):
        spec = GroupSpec.single(3, 2)
        params = derive_params(spec, 1, Fraction(1, 2), override_t=1)
        report = run_exact(random_function(spec, make_rng(1)), params, make_rng(2))
        payload = report.to_json()
        for key in ("decision", "s", "epsilon", "t", "tau", "M", "heavy_count",
                    "queries", "seed", "buckets"):
            assert key in payload
        assert all({"b", "estimate_re", "estimate_im", "exact_wt"} <= set(b)
                   for b in payload["buckets"])


class TestSamplingBackend:
    def test_query_count_is_2m(self):
        spec = GroupSpec.single(3, 3)
        f = DenseFunction(spec, (1,) * 27)
        params = derive_params(spec, 1, Fraction(1, 2), override_tau=Fraction(1, 10),
                               override_m=777, backend="sampling")
        oracle = f.as_oracle()
        run_sampling(oracle, params, make_rng(0))
        assert oracle.queries == 2 * 777

    def test_constant_accepts(self):
        spec = GroupSpec.single(3, 3)
        f = DenseFunction(spec, (1,) * 27)
        params = derive_params(spec, 1, Fraction(1, 2), override_tau=Fraction(1, 10),
                               override_m=2000, backend="sampling")
        yes = sum(run_sampling(f.as_oracle(), params, make_rng(seed)).decision == "YES"
                  for seed in range(100))
        assert yes >= 95

    def test_sparse_accepts(self):
        # minimal nonconstant sparsity over Z_3 is 3 (supports close under scaling)
        spec = GroupSpec.single(3, 3)
        k = PrimeSubspace.from_vectors(3, 3, [(0, 1, 0), (0, 0, 1)])
        f = coset_constant_random(spec, k, make_rng(5))
        assert dft_fast(f).sparsity == 3
        params = derive_params(spec, 3, Fraction(1, 2), override_tau=Fraction(1, 20),
                               override_m=5000, backend="sampling")
        yes = sum(run_sampling(f.as_oracle(), params, make_rng(seed)).decision == "YES"
                  for seed in range(50))
        assert yes >= 45

    def test_far_rejects(self):
        spec = GroupSpec.single(3, 4)
        f = random_function(spec, make_rng(42))
        params = derive_params(spec, 2, Fraction(1, 100), override_t=2,
                               override_tau=Fraction(1, 20), override_m=5000,
                               backend="sampling")
        no = sum(run_sampling(f.as_oracle(), params, make_rng(seed)).decision == "NO"
                 for seed in range(50))
        assert no >= 45

    def test_backend_mismatch_raises(self):
        spec = GroupSpec.single(3, 2)
        params = derive_params(spec, 1, Fraction(1, 2))
        with pytest.raises(ValueError):
            run_sampling(DenseFunction(spec, (1,) * 9).as_oracle(), params, make_rng(0))


class TestMultiPrime:
    def test_exact_backend_product_group(self):
        spec = GroupSpec(((2, 2), (3, 1)))
        const = DenseFunction(spec, (1,) * 12)
        params = derive_params(spec, 1, Fraction(1, 2))
        assert params.t_draw == (2, 1)  # capped per factor
        for seed in range(10):
            assert run_exact(const, params, make_rng(seed)).decision == "YES"
        far = random_function(spec, make_rng(4))
        params_far = derive_params(spec, 1, Fraction(1, 1000))
        no = sum(run_exact(far, params_far, make_rng(seed)).decision == "NO"
                 for seed in range(10))
        assert no >= 9

    def test_sampling_backend_product_group(self):
        spec = GroupSpec(((2, 2), (3, 1)))
        const = DenseFunction(spec, (1,) * 12)
        params = derive_params(spec, 1, Fraction(1, 2), override_tau=Fraction(1, 10),
                               override_m=1500, backend="sampling")
        oracle = const.as_oracle()
        report = run_sampling(oracle, params, make_rng(2))
        assert report.decision == "YES"
        assert oracle.queries == 3000


class TestFastEstimator:
    def test_single_sample(self):
        lspec = GroupSpec.single(3, 2)
        c = 4  # label (1,1)
        u = lspec.element([(0, 2)])
        out = estimate_all_buckets_fast(lspec, [c], [1], u)
        naive = naive_bucket_numerators(lspec, [c], [1], u)
        for b in range(9):
            assert out[b] == naive[b]
            # single sample: numerator is w^{<c, b+u>}
            shifted = lspec.from_index(b) + u
            exp = sum(a * v for a, v in zip(lspec.from_index(c).coords[0],
                                            shifted.coords[0])) % 3
            assert out[b] == CycInt.monomial((3,), (exp,))

    def test_matches_naive_on_random_sets(self):
        lspec = GroupSpec.single(3, 3)
        rng = make_rng(3)
        for _ in range(50):
            m = int(rng.integers(1, 40))
            cs = [int(c) for c in rng.integers(0, 27, size=m)]
            ws = [int(w) for w in rng.choice((-1, 1), size=m)]
            u = lspec.from_index(int(rng.integers(0, 27)))
            assert estimate_all_buckets_fast(lspec, cs, ws, u) == \
                naive_bucket_numerators(lspec, cs, ws, u)

    def test_shift_is_relabeling(self):
        lspec = GroupSpec.single(3, 2)
        rng = make_rng(4)
        cs = [int(c) for c in rng.integers(0, 9, size=60)]
        ws = [int(w) for w in rng.choice((-1, 1), size=60)]
        base = estimate_all_buckets_fast(lspec, cs, ws, lspec.zero())
        u = lspec.element([(2, 1)])
        shifted = estimate_all_buckets_fast(lspec, cs, ws, u)
        relabeled = {b: base[lspec.lex_index(lspec.from_index(b) + u)] for b in range(9)}
        assert shifted == relabeled
        assert sorted(map(str, shifted.values())) == sorted(map(str, base.values()))


class TestVarianceBound:
    def test_small_coefficient_bucket_variance(self):
        # Y_b = weight of the small-coefficient part of a shifted bucket:
        # built from per-character terms all <= tau with pairwise zero
        # covariance, so Var[Y_b] <= tau * E[Y_b] (checked within 3 sigma).
        import numpy as np

        spec = GroupSpec.single(3, 4)
        f = random_function(spec, make_rng(70))
        tau = 0.05
        weights, chis = [], []
        for r, c in dft_fast(f).items():
            from absparse.cyclotomic import numeric_eval

            w = abs(numeric_eval(c)[0]) ** 2
            if w < tau:
                weights.append(w)
                chis.append([x for blk in spec.from_index(r).coords for x in blk])
        weights = np.array(weights)
        chi_mat = np.array(chis, dtype=np.int64)
        t, n, draws = 2, 4, 4000
        rng = make_rng(71)
        vs = rng.integers(0, 3, size=(draws, t, n))
        us = rng.integers(0, 3, size=(draws, t))
        dots = np.einsum("dtn,sn->dts", vs, chi_mat) % 3
        member = np.all(dots == us[:, :, None], axis=1)  # bucket b = 0
        y = member @ weights
        var, mean = float(y.var(ddof=1)), float(y.mean())
        dev_sq = (y - mean) ** 2
        se_var = float(dev_sq.std(ddof=1)) / np.sqrt(draws)
        assert var <= tau * mean + 3 * se_var


class TestExpectationIdentity:
    def test_exhaustive_average_equals_weight(self):
        spec = GroupSpec.single(3, 2)
        for seed in range(5):
            rng = make_rng(seed)
            f = random_function(spec, rng)
            params = derive_params(spec, 1, Fraction(1, 2), override_t=1)
            _, _, rows = estimator_expectation_exact(f, params, rng)
            assert len(rows) == 3
            assert all(equal for _, _, _, equal in rows)

    def test_full_dimension_buckets(self):
        spec = GroupSpec.single(3, 2)
        rng = make_rng(9)
        f = random_function(spec, rng)
        params = derive_params(spec, 1, Fraction(1, 2), override_t=2)
        _, _, rows = estimator_expectation_exact(f, params, rng)
        assert len(rows) == 9
        assert all(equal for _, _, _, equal in rows)
