"""Randomized sparsity testing with sampling and exact backends.

Both backends draw a random per-factor subspace H (dimension capped at the
ambient dimension) plus a uniform label shift u, bucket the dual group by the
cosets of H_perp, and count buckets whose (estimated or exact) weight clears
2*tau/3; the answer is YES iff at most s buckets are heavy.

Bucket labels live in the auxiliary group prod_i Z_{p_i}^{t_i}: the label of
chi is (<chi_i, v_{i,j}>)_j - u, where v are the RREF basis rows of H.  The
estimator never materialises a coset representative: for z = sum_j c_j v_j,
chi_r(z) = w^{<c, b+u>} depends only on the bucket label, which is also what
makes the all-buckets histogram transform exact.

The shift is drawn uniformly over the whole label group (including 0); it
only relabels buckets, so the heavy count is shift-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._backend import butterfly_stage
from .cyclotomic import CycInt, CycRational, compare_real_to_rational, format_value
from .groups import GroupElement, GroupSpec, ProductSubspace, random_subspace
from .spectrum import DenseFunction, QueryOracle, dft_fast

__all__ = [
    "TestParams",
    "TestReport",
    "derive_params",
    "run_exact",
    "run_sampling",
    "estimate_all_buckets_fast",
    "naive_bucket_numerators",
    "estimator_expectation_exact",
]

_BUCKET_REPORT_CAP = 4096


def _min_exp_at_least(p: int, power: int, target: int) -> int:
    """Smallest e >= 0 with p^(e*power) >= target, by exact integer comparison."""
    e = 0
    val = 1
    step = p**power
    while val < target:
        val *= step
        e += 1
    return e


@dataclass(frozen=True)
class TestParams:
    """Derived (or overridden) parameters of one tester invocation."""

    spec: GroupSpec
    s: int
    epsilon: Fraction
    t_list: tuple[int, ...]
    t_draw: tuple[int, ...]
    tau: Fraction
    m_samples: int
    backend: str
    overrides: tuple[str, ...] = ()

    @property
    def heavy_threshold(self) -> Fraction:
        return 2 * self.tau / 3

    def label_spec(self) -> GroupSpec:
        return GroupSpec(tuple((p, t) for (p, _), t in zip(self.spec.factors, self.t_draw)))


def derive_params(
    spec: GroupSpec,
    s: int,
    epsilon,
    override_t: Sequence[int] | int | None = None,
    override_tau=None,
    override_m: int | None = None,
    backend: str = "exact",
) -> TestParams:
    """t_i, tau and M from the published formulas; overrides are flagged.

    t_i = ceil(2 log_{p_i} s^{1/t} + log_{p_i} 20) + 1 (single factor:
    ceil(log_p 20 s^2) + 1), decided in exact integer arithmetic;
    tau = min(eps^2 / (40 prod p_i^{t_i}), 1 / (m^2 s)^{phi(m)});
    M = ceil((4 / tau^2) ln(40 prod p_i^{t_i})).
    """
    if s < 1:
        raise ValueError("target sparsity must be >= 1")
    if backend not in ("exact", "sampling"):
        raise ValueError(f"unknown backend {backend!r}")
    eps = Fraction(epsilon)
    if not 0 < eps <= 2:
        raise ValueError("epsilon must lie in (0, 2]")

    nfac = spec.num_factors
    overrides = []
    if override_t is None:
        target = (20**nfac) * s * s
        t_list = tuple(_min_exp_at_least(p, nfac, target) + 1 for p in spec.primes)
    else:
        t_list = ((override_t,) * nfac if isinstance(override_t, int) else tuple(override_t))
        if len(t_list) != nfac or any(t < 1 for t in t_list):
            raise ValueError("override t must give one positive dimension per factor")
        overrides.append("t")

    bucket_count = math.prod(p**t for p, t in zip(spec.primes, t_list))
    if override_tau is None:
        tau = min(eps * eps / (40 * bucket_count),
                  Fraction(1, (spec.m**2 * s) ** spec.phi_m))
    else:
        tau = Fraction(override_tau)
        if tau <= 0:
            raise ValueError("tau must be positive")
        overrides.append("tau")

    if override_m is None:
        log_term = Fraction.from_float(math.log(40 * bucket_count))
        m_samples = math.ceil(Fraction(4) / (tau * tau) * log_term)
    else:
        if override_m < 1:
            raise ValueError("M must be >= 1")
        m_samples = override_m
        overrides.append("M")

    t_draw = tuple(min(t, n) for t, (_, n) in zip(t_list, spec.factors))
    return TestParams(spec, s, eps, t_list, t_draw, tau, m_samples, backend, tuple(overrides))


@dataclass
class TestReport:
    decision: str
    params: TestParams
    heavy_count: int
    queries: int
    subspace_rows: tuple[tuple[tuple[int, ...], ...], ...]
    shift: tuple[tuple[int, ...], ...]
    buckets: list[dict]
    seed: int | None = None
    buckets_truncated: bool = False

    def to_json(self) -> dict:
        p = self.params
        out = {
            "decision": self.decision,
            "s": p.s,
            "epsilon": str(p.epsilon),
            "t": list(p.t_list) if len(p.t_list) > 1 else p.t_list[0],
            "t_drawn": list(p.t_draw) if len(p.t_draw) > 1 else p.t_draw[0],
            "tau": str(p.tau),
            "M": p.m_samples,
            "backend": p.backend,
            "overrides": list(p.overrides),
            "heavy_count": self.heavy_count,
            "queries": self.queries,
            "seed": self.seed,
            "subspace": [[list(row) for row in rows] for rows in self.subspace_rows],
            "shift": [list(block) for block in self.shift],
            "buckets": self.buckets,
        }
        if self.buckets_truncated:
            out["buckets_truncated"] = True
        return out


def _draw_partition(params: TestParams, rng):
    """Random H (per factor) and uniform shift u in the label group."""
    spec = params.spec
    parts = tuple(random_subspace(p, n, t, rng)
                  for (p, n), t in zip(spec.factors, params.t_draw))
    h = ProductSubspace(spec, parts)
    lspec = params.label_spec()
    u = lspec.element([tuple(int(c) for c in rng.integers(0, p, size=t))
                       for (p, _), t in zip(spec.factors, params.t_draw)])
    return h, u


def _label_of(h: ProductSubspace, u: GroupElement, lspec: GroupSpec, chi: GroupElement) -> GroupElement:
    """Bucket label b with chi in C_u(b): b_j = <chi_i, v_{i,j}> - u_j."""
    blocks = []
    for part, (p, _), xs, us in zip(h.parts, h.spec.factors, chi.coords, u.coords):
        blocks.append(tuple((sum(a * b for a, b in zip(row, xs)) - uj) % p
                            for row, uj in zip(part.rows, us)))
    return GroupElement(lspec, tuple(blocks))


def run_exact(f: DenseFunction, params: TestParams, rng) -> TestReport:
    """Decision from exact bucket weights of the full spectrum.

    Reports the whole table read as the query cost.  Deterministically says
    YES on every s-sparse input: at most s buckets can carry weight at all.
    """
    if params.backend != "exact":
        raise ValueError("params built for a different backend")
    spec = f.spec
    h, u = _draw_partition(params, rng)
    lspec = params.label_spec()
    spect = dft_fast(f)

    weights: dict[int, CycRational] = {}
    for r, c in spect.items():
        b = _label_of(h, u, lspec, spec.from_index(r))
        idx = lspec.lex_index(b)
        w = c.conjugate() * c
        weights[idx] = weights[idx] + w if idx in weights else w

    heavy = sum(1 for w in weights.values()
                if compare_real_to_rational(w, params.heavy_threshold) >= 0)
    decision = "YES" if heavy <= params.s else "NO"

    buckets = []
    truncated = lspec.order > _BUCKET_REPORT_CAP
    indices = sorted(weights) if truncated else range(lspec.order)
    zero = CycRational.zero(spec.primes)
    for idx in indices:
        w = weights.get(idx, zero)
        buckets.append({
            "b": [list(block) for block in lspec.from_index(idx).coords],
            "estimate_re": float(w.to_complex().real),
            "estimate_im": 0.0,
            "exact_wt": format_value(w),
        })
    return TestReport(decision, params, heavy, spec.order,
                      tuple(part.rows for part in h.parts),
                      u.coords, buckets, buckets_truncated=truncated)


def _digit_layout(spec: GroupSpec):
    radices = [p for (p, n) in spec.factors for _ in range(n)]
    weights = []
    acc = 1
    for p in reversed(radices):
        weights.append(acc)
        acc *= p
    return np.array(radices), np.array(list(reversed(weights)), dtype=np.int64)


def run_sampling(oracle: QueryOracle, params: TestParams, rng) -> TestReport:
    """The sampling tester: 2M queries, exact estimate numerators.

    Per sample, z = sum_j c_j v_j with c uniform over the label group and x
    uniform; the bucket-b estimate is (1/M) sum_i w_i w^{<c_i, b+u>} with
    w_i = f(x_i) f(x_i - z_i).  The decision compares the real part against
    2*tau/3, kept exact via the doubled form N + conj(N) vs 4*tau*M/3.
    """
    if params.backend != "sampling":
        raise ValueError("params built for a different backend")
    spec = oracle.spec
    h, u = _draw_partition(params, rng)
    lspec = params.label_spec()
    m = params.m_samples

    radices, weights = _digit_layout(spec)
    lradices, lweights = _digit_layout(lspec)

    x_mat = rng.integers(0, radices, size=(m, len(radices)))
    c_mat = rng.integers(0, lradices, size=(m, len(lradices)))

    # z coordinates per factor: c_i @ V_i mod p_i
    z_blocks = []
    col = 0
    for part, (p, n) in zip(h.parts, spec.factors):
        t = part.dim
        cs = c_mat[:, col : col + t]
        if t:
            v = np.array(part.rows, dtype=np.int64)
            z_blocks.append((cs @ v) % p)
        else:
            z_blocks.append(np.zeros((m, n), dtype=np.int64))
        col += t
    z_mat = np.concatenate(z_blocks, axis=1)
    xz_mat = (x_mat - z_mat) % radices

    x_idx = x_mat @ weights
    xz_idx = xz_mat @ weights
    fx = oracle.eval_indices(x_idx)
    fxz = oracle.eval_indices(xz_idx)
    w_vals = fx * fxz

    c_idx = c_mat @ lweights
    hist = np.zeros(lspec.order, dtype=np.int64)
    np.add.at(hist, c_idx, w_vals)

    numerators = _character_sums(lspec, hist)  # index = beta = b + u
    u_idx_add = [lspec.lex_index(lspec.from_index(b) + u) for b in range(lspec.order)]

    threshold = 4 * params.tau * m / 3
    heavy = 0
    buckets = []
    truncated = lspec.order > _BUCKET_REPORT_CAP
    for b in range(lspec.order):
        num = numerators[u_idx_add[b]]
        doubled = CycRational.make(num + num.conjugate())
        if compare_real_to_rational(doubled, threshold) >= 0:
            heavy += 1
        if not truncated:
            z = num.to_complex() / m
            buckets.append({
                "b": [list(block) for block in lspec.from_index(b).coords],
                "estimate_re": z.real,
                "estimate_im": z.imag,
            })
    decision = "YES" if heavy <= params.s else "NO"
    return TestReport(decision, params, heavy, oracle.queries,
                      tuple(part.rows for part in h.parts), u.coords, buckets,
                      buckets_truncated=truncated)


def _character_sums(lspec: GroupSpec, values: np.ndarray) -> list[CycInt]:
    """N_beta = sum_c values[c] * w^{<c, beta>} for every beta, exactly."""
    primes = lspec.primes
    e_size = math.prod(primes)
    w = np.zeros((lspec.order, e_size), dtype=np.int64)
    w[:, 0] = values
    radices = [p for (p, n) in lspec.factors for _ in range(n)]
    digit_factor = [i for i, (p, n) in enumerate(lspec.factors) for _ in range(n)]
    for q, p in enumerate(radices):
        i = digit_factor[q]
        a_sz = math.prod(radices[:q]) if q else 1
        b_sz = math.prod(radices[q + 1 :]) if q + 1 < len(radices) else 1
        e_pre = math.prod(primes[:i]) if i else 1
        e_post = math.prod(primes[i + 1 :]) if i + 1 < len(primes) else 1
        v = w.reshape(a_sz, p, b_sz, e_pre, p, e_post)
        v = np.moveaxis(v, 4, 5)
        v = np.ascontiguousarray(v.reshape(a_sz, p, b_sz * e_pre * e_post, p))
        v = butterfly_stage(v, p, +1)
        v = v.reshape(a_sz, p, b_sz, e_pre, e_post, p)
        v = np.moveaxis(v, 5, 4)
        w = np.ascontiguousarray(v.reshape(lspec.order, e_size))
    reduced = w.reshape((lspec.order,) + tuple(primes))
    for ax, p in enumerate(primes):
        lead = (slice(None),) * (ax + 1)
        reduced = reduced[lead + (slice(0, p - 1),)] - reduced[lead + (slice(p - 1, p),)]
    reduced = reduced.reshape(lspec.order, -1)
    return [CycInt(primes, tuple(int(v) for v in reduced[i])) for i in range(lspec.order)]


def estimate_all_buckets_fast(lspec: GroupSpec, c_indices: Sequence[int],
                              w_values: Sequence[int], u: GroupElement) -> dict[int, CycInt]:
    """Exact numerators sum_i w_i w^{<c_i, b+u>} for all buckets at once."""
    hist = np.zeros(lspec.order, dtype=np.int64)
    np.add.at(hist, np.asarray(c_indices, dtype=np.int64), np.asarray(w_values, dtype=np.int64))
    sums = _character_sums(lspec, hist)
    return {b: sums[lspec.lex_index(lspec.from_index(b) + u)] for b in range(lspec.order)}


def naive_bucket_numerators(lspec: GroupSpec, c_indices: Sequence[int],
                            w_values: Sequence[int], u: GroupElement) -> dict[int, CycInt]:
    """Reference per-bucket loop for the fast estimator (exact, one bucket at a time)."""
    primes = lspec.primes
    out = {}
    cs = [lspec.from_index(int(c)) for c in c_indices]
    for b in range(lspec.order):
        shifted = lspec.from_index(b) + u
        acc = CycInt.zero(primes)
        for c, w in zip(cs, w_values):
            exps = [sum(a * v for a, v in zip(cb, sb)) % p
                    for p, cb, sb in zip(primes, c.coords, shifted.coords)]
            acc = acc + CycInt.monomial(primes, exps, int(w))
        out[b] = acc
    return out


def estimator_expectation_exact(f: DenseFunction, params: TestParams, rng):
    """Exhaustive average over G x H per bucket, compared exactly to wt.

    Returns (h, u, list of (bucket label index, average, exact weight, equal)).
    """
    spec = f.spec
    h, u = _draw_partition(params, rng)
    lspec = params.label_spec()

    radices, weights = _digit_layout(spec)
    lradices, lweights = _digit_layout(lspec)
    n_pts, n_lab = spec.order, lspec.order

    hist = np.zeros(n_lab, dtype=np.int64)
    table = f.as_array()
    all_x = np.array([[c for block in spec.from_index(i).coords for c in block]
                      for i in range(n_pts)], dtype=np.int64)
    for c_flat in range(n_lab):
        c = lspec.from_index(c_flat)
        z = []
        for part, (p, _), cb in zip(h.parts, spec.factors, c.coords):
            if part.dim:
                v = np.array(part.rows, dtype=np.int64)
                z.extend((np.array(cb, dtype=np.int64) @ v) % p)
            else:
                z.extend([0] * part.n)
        xz = (all_x - np.array(z, dtype=np.int64)) % radices
        hist[c_flat] = int(np.sum(table * table[xz @ weights]))

    sums = _character_sums(lspec, hist)
    denom = n_pts * n_lab

    wt_by_label: dict[int, CycRational] = {}
    spect = dft_fast(f)
    for r, c in spect.items():
        b = _label_of(h, u, lspec, spec.from_index(r))
        idx = lspec.lex_index(b)
        w = c.conjugate() * c
        wt_by_label[idx] = wt_by_label[idx] + w if idx in wt_by_label else w

    rows = []
    zero = CycRational.zero(spec.primes)
    for b in range(n_lab):
        avg = CycRational.make(sums[lspec.lex_index(lspec.from_index(b) + u)], denom)
        wt = wt_by_label.get(b, zero)
        rows.append((b, avg, wt, avg == wt))
    return h, u, rows
