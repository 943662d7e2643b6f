import pytest

from absparse.cyclotomic import CycRational, canonicalize
from absparse.errors import EnumerationGuardError, SpecMismatchError
from absparse.groups import (
    Coset,
    GroupSpec,
    PrimeSubspace,
    ProductSubspace,
    character_value,
    dilate_element,
    enumerate_cosets,
    enumerate_subspaces,
    nullspace,
    random_subspace,
    rref_solve,
)

from conftest import make_rng


def cyc(primes, coeffs, den=1):
    return CycRational.make(canonicalize(primes, coeffs), den)


class TestGroupSpec:
    def test_derived_quantities(self):
        spec = GroupSpec(((2, 2), (3, 1), (5, 1)))
        assert spec.order == 4 * 3 * 5
        assert spec.m == 30
        assert spec.phi_m == 1 * 2 * 4
        assert spec.num_factors == 3

    def test_rejects_bad_factors(self):
        with pytest.raises(ValueError):
            GroupSpec(((4, 1),))
        with pytest.raises(ValueError):
            GroupSpec(((3, 1), (3, 2)))
        with pytest.raises(ValueError):
            GroupSpec(((3, 0),))

    def test_lex_examples(self):
        spec = GroupSpec.single(3, 2)
        assert spec.lex_index(spec.element([(0, 0)])) == 0
        assert spec.lex_index(spec.element([(1, 2)])) == 5
        mp = GroupSpec(((2, 1), (3, 1)))
        assert mp.lex_index(mp.element([(1,), (0,)])) == 3

    def test_lex_bijection_exhaustive(self):
        for spec in (GroupSpec.single(3, 6), GroupSpec(((2, 2), (3, 2), (5, 1)))):
            seen = set()
            for i in range(spec.order):
                x = spec.from_index(i)
                assert spec.lex_index(x) == i
                seen.add(x.coords)
            assert len(seen) == spec.order

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            GroupSpec.single(3, 1).from_index(3)


class TestElements:
    def test_addition_identity(self):
        spec = GroupSpec(((2, 1), (3, 2)))
        x = spec.element([(1,), (2, 1)])
        assert x + spec.zero() == x
        assert (x - x).is_zero()

    def test_spec_mismatch(self):
        a = GroupSpec.single(3, 1).element([(1,)])
        b = GroupSpec.single(5, 1).element([(1,)])
        with pytest.raises(SpecMismatchError):
            a + b


class TestCharacters:
    def test_examples(self):
        z3 = GroupSpec.single(3, 1)
        assert character_value(z3.element([(1,)]), z3.element([(2,)])) == cyc((3,), [0, 0, 1])
        z22 = GroupSpec.single(2, 2)
        assert character_value(z22.element([(1, 1)]), z22.element([(1, 0)])) == cyc((2,), [-1])
        mp = GroupSpec(((2, 1), (3, 1)))
        v = character_value(mp.element([(1,), (1,)]), mp.element([(1,), (2,)]))
        assert v == cyc((2, 3), {(1, 2): 1})  # -w3^2

    def test_homomorphism_property(self):
        rng = make_rng(10)
        spec = GroupSpec(((2, 2), (3, 2)))
        pts = [spec.from_index(int(i)) for i in rng.integers(0, spec.order, size=30)]
        for i in range(0, 30, 3):
            r, x, y = pts[i], pts[i + 1], pts[i + 2]
            assert character_value(r, x + y) == character_value(r, x) * character_value(r, y)

    def test_subgroup_sum_is_size_indicator(self):
        # sum_{h in H} chi_h(r) = |H| if r in H_perp else 0, exactly
        spec = GroupSpec.single(3, 3)
        h = ProductSubspace.from_single(spec, PrimeSubspace.from_vectors(3, 3, [(1, 0, 2), (0, 1, 1)]))
        hperp = h.complement()
        for r in spec.elements():
            total = CycRational.zero(spec.primes)
            for hh in h.elements():
                total = total + character_value(hh, r)
            if hperp.contains(r):
                assert total == cyc((3,), [h.size])
            else:
                assert total.is_zero()


class TestLinearAlgebra:
    def test_rref_solve_examples(self):
        assert rref_solve(3, [(1, 2)], (1,)) == (1, 0)
        assert rref_solve(3, [(1, 0), (0, 1)], (2, 1)) == (2, 1)
        assert rref_solve(2, [(1, 1), (1, 1)], (0, 1)) is None

    def test_complement_examples(self):
        h = PrimeSubspace.from_vectors(3, 2, [(1, 1)])
        assert h.complement().rows == ((1, 2),)
        assert PrimeSubspace.zero(5, 1).complement().rows == ((1,),)

    def test_complement_orthogonality_random(self):
        rng = make_rng(11)
        for _ in range(20):
            h = random_subspace(3, 4, 2, rng)
            c = h.complement()
            assert c.dim == 2
            for u in h.rows:
                for v in c.rows:
                    assert sum(a * b for a, b in zip(u, v)) % 3 == 0

    def test_complement_involution_exhaustive_z3_cubed(self):
        for d in range(4):
            for h in enumerate_subspaces(3, 3, d):
                c = h.complement()
                assert h.dim + c.dim == 3
                assert c.complement() == h

    def test_random_subspace_rank(self):
        rng = make_rng(12)
        for _ in range(10000):
            assert random_subspace(3, 4, 2, rng).dim == 2
        assert random_subspace(3, 4, 0, rng).dim == 0
        assert random_subspace(3, 4, 4, rng) == PrimeSubspace.full(3, 4)

    def test_nullspace_solves(self):
        rows = [(1, 2, 0), (0, 1, 1)]
        for v in nullspace(3, rows, 3):
            assert all(sum(a * b for a, b in zip(r, v)) % 3 == 0 for r in rows)


class TestCosets:
    def test_enumeration_counts(self):
        spec = GroupSpec.single(3, 2)
        hperp = ProductSubspace.from_single(spec, PrimeSubspace.from_vectors(3, 2, [(1, 2)]))
        cosets = enumerate_cosets(hperp)
        assert len(cosets) == 3
        seen = set()
        for coset in cosets:
            members = list(coset.elements())
            assert len(members) == 3
            seen.update(m.coords for m in members)
        assert len(seen) == 9

    def test_full_and_zero(self):
        spec = GroupSpec.single(2, 3)
        assert len(enumerate_cosets(ProductSubspace.full(spec))) == 1
        assert len(enumerate_cosets(ProductSubspace.zero(spec))) == 8

    def test_coset_equality_canonical(self):
        spec = GroupSpec.single(3, 2)
        h = ProductSubspace.from_single(spec, PrimeSubspace.from_vectors(3, 2, [(1, 1)]))
        a = Coset.of(h, spec.element([(1, 0)]))
        b = Coset.of(h, spec.element([(2, 1)]))  # (1,0) + (1,1)
        assert a == b and a.contains(spec.element([(2, 1)]))

    def test_multi_prime_cosets(self):
        spec = GroupSpec(((2, 2), (3, 1)))
        h = ProductSubspace(spec, (PrimeSubspace.from_vectors(2, 2, [(1, 0)]),
                                   PrimeSubspace.zero(3, 1)))
        assert len(enumerate_cosets(h)) == spec.order // h.size == 6

    def test_enumeration_guard(self):
        spec = GroupSpec.single(2, 25)  # 2^25 cosets of the zero subspace
        with pytest.raises(EnumerationGuardError):
            enumerate_cosets(ProductSubspace.zero(spec))


class TestDilation:
    def test_examples(self):
        z5 = GroupSpec.single(5, 1)
        assert dilate_element(z5.element([(3,)]), 2) == z5.element([(4,)])
        assert dilate_element(z5.element([(3,)]), 1) == z5.element([(3,)])
        z32 = GroupSpec.single(3, 2)
        assert dilate_element(z32.element([(1, 2)]), 2) == z32.element([(2, 1)])

    def test_rejects_multi_prime_and_non_unit(self):
        mp = GroupSpec(((2, 1), (3, 1)))
        with pytest.raises(SpecMismatchError):
            dilate_element(mp.zero(), 1)
        with pytest.raises(ValueError):
            dilate_element(GroupSpec.single(5, 1).element([(1,)]), 5)
