"""Command-line surface: gen / analyze / transform / test / verify / bench.

Reports are JSON envelopes (schema "abspase-report/1") that are byte-identical
for a fixed (input, seed, params); exact rationals are emitted as strings.
bench is the one exception: its payload is wall-clock timings.
Exit codes: 0 ok (YES / pass / certified), 2 usage or parse error, 3 NO,
4 verification fail, 5 inconclusive.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from ._backend import backends
from .checks import (
    check_boolean_repair,
    check_coeff_lower_bounds,
    check_granularity_exact,
    check_mu_close,
    check_norm_products,
    check_small_coefficient_family,
    stat_bucket_properties,
    stat_estimator_concentration,
)
from .checks import granularity_exponents
from .cyclotomic import format_value, is_granular, numeric_eval
from .errors import AbsparseError, FunctionFileError
from .families import FAMILY_NAMES, FamilyDescriptor, build_family
from .groups import GroupSpec
from .spectrum import (
    DEG_GUARD,
    DenseFunction,
    deg_p,
    dft_exact,
    dft_fast,
    dft_kronecker,
    min_coefficient,
    spectrum_to_json,
)
from .tester import (
    derive_params,
    estimate_all_buckets_fast,
    naive_bucket_numerators,
    run_exact,
    run_sampling,
)

MAGIC = "ABSPARSE v1"
SCHEMA = "abspase-report/1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO = 3
EXIT_FAIL = 4
EXIT_INCONCLUSIVE = 5


# -- function file format ----------------------------------------------------


def serialize_function(f: DenseFunction) -> str:
    lines = [MAGIC, str(f.spec.num_factors),
             " ".join(f"{p} {n}" for p, n in f.spec.factors)]
    lines.extend("+1" if v == 1 else "-1" for v in f.table)
    return "\n".join(lines) + "\n"


def parse_function_file(data: bytes | str) -> DenseFunction:
    text = data.decode() if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise FunctionFileError(f"bad magic, expected {MAGIC!r}", line=1)
    try:
        nfac = int(lines[1].strip())
    except (IndexError, ValueError):
        raise FunctionFileError("expected the number of factors", line=2)
    if nfac < 1:
        raise FunctionFileError("factor count must be >= 1", line=2)
    try:
        tokens = lines[2].split()
    except IndexError:
        raise FunctionFileError("expected 'p n' pairs", line=3)
    if len(tokens) != 2 * nfac:
        raise FunctionFileError(f"expected {2 * nfac} integers for {nfac} factors", line=3)
    try:
        factors = tuple((int(tokens[2 * i]), int(tokens[2 * i + 1])) for i in range(nfac))
    except ValueError:
        raise FunctionFileError("factor entries must be integers", line=3)
    try:
        spec = GroupSpec(factors)
    except ValueError as exc:
        raise FunctionFileError(str(exc), line=3)
    body = [ln for ln in lines[3:] if ln.strip()]
    if len(body) != spec.order:
        raise FunctionFileError(
            f"expected {spec.order} body lines, found {len(body)}", line=4 + len(body))
    table = []
    for off, ln in enumerate(body):
        tok = ln.strip()
        if tok == "+1":
            table.append(1)
        elif tok == "-1":
            table.append(-1)
        else:
            raise FunctionFileError(f"expected '+1' or '-1', found {tok!r}", line=4 + off)
    return DenseFunction(spec, tuple(table))


# -- envelopes ----------------------------------------------------------------


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _envelope(command: str, digest: str, seed: int | None, params: dict, payload: dict) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "input_digest": digest,
        "seed": seed,
        "params": params,
        "payload": payload,
        "tool_version": __version__,
    }


def _emit(args, envelope: dict, human: str) -> None:
    if args.json:
        print(json.dumps(envelope, sort_keys=True, separators=(",", ":")))
    else:
        print(human)


def _read_input(args) -> tuple[DenseFunction, str]:
    if getattr(args, "input", None) and args.input != "-":
        with open(args.input, "rb") as fh:
            raw = fh.read()
    else:
        raw = sys.stdin.buffer.read()
    return parse_function_file(raw), _digest(raw)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


# -- subcommands --------------------------------------------------------------


def _cmd_gen(args) -> int:
    desc = FamilyDescriptor(args.family, p=args.p, n=args.n, seed=args.seed,
                            subspace_dim=args.subspace_dim)
    f = build_family(desc, rng=_rng(args.seed))
    text = serialize_function(f)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    f, digest = _read_input(args)
    spec = f.spec
    spect = dft_fast(f)
    payload: dict = {"order": spec.order, "factors": [list(fac) for fac in spec.factors],
                     "s_f": spect.sparsity}
    if spect.sparsity:
        r_min, c_min = min_coefficient(spect)
        z, rad = numeric_eval(c_min)
        payload["min_coeff"] = {"r": [list(b) for b in spec.from_index(r_min).coords],
                                "value": format_value(c_min), "abs": abs(z), "abs_err": rad}
        k_bound = granularity_exponents(spec, spect.sparsity)
        k_min = []
        for i, p in enumerate(spec.primes):
            k = 0
            while not all(is_granular(c, tuple(k if j == i else spec.factors[j][1]
                                                for j in range(spec.num_factors)))
                          for _, c in spect.items()):
                k += 1
            k_min.append(k)
        payload["granularity_k"] = k_min
        payload["granularity_k_bound"] = list(k_bound)
    if spec.is_single_prime() and spec.order <= DEG_GUARD:
        payload["deg_p"] = deg_p(f)
    env = _envelope("analyze", digest, None, {}, payload)
    _emit(args, env, f"s_f = {payload['s_f']}" + (
        f"; min |coeff| = {payload['min_coeff']['abs']:.6g}" if spect.sparsity else ""))
    return EXIT_OK


def _cmd_transform(args) -> int:
    f, digest = _read_input(args)
    spect = dft_exact(f) if f.spec.order <= 1024 else dft_fast(f)
    payload = spectrum_to_json(spect)
    env = _envelope("transform", digest, None, {}, payload)
    _emit(args, env, f"{len(payload['entries'])} nonzero coefficients")
    return EXIT_OK


def _cmd_test(args) -> int:
    f, digest = _read_input(args)
    eps = Fraction(args.epsilon)
    params = derive_params(
        f.spec, args.s, eps,
        override_t=args.override_t, override_tau=Fraction(args.override_tau) if args.override_tau else None,
        override_m=args.override_M, backend=args.backend)
    rng = _rng(args.seed)
    if args.backend == "exact":
        report = run_exact(f, params, rng)
    else:
        report = run_sampling(f.as_oracle(), params, rng)
    report.seed = args.seed
    env = _envelope("test", digest, args.seed,
                    {"s": args.s, "epsilon": str(eps), "backend": args.backend},
                    report.to_json())
    _emit(args, env, f"{report.decision} (heavy buckets: {report.heavy_count}, "
                     f"queries: {report.queries})")
    return EXIT_OK if report.decision == "YES" else EXIT_NO


_CHECK_NAMES = ("granularity", "mu-close", "coeff-lower-bounds", "boolean-repair",
                "norm-products", "bucket-stats", "estimator-concentration",
                "small-coefficient-family")


def _cmd_verify(args) -> int:
    rng = _rng(args.seed)
    digest = ""
    if args.check in ("granularity", "mu-close", "coeff-lower-bounds", "boolean-repair",
                      "estimator-concentration"):
        f, digest = _read_input(args)
    if args.check == "granularity":
        report = check_granularity_exact(f, s=args.s)
    elif args.check == "mu-close":
        if args.s is None:
            raise AbsparseError("--s is required for mu-close")
        report = check_mu_close(f, args.s)
    elif args.check == "coeff-lower-bounds":
        report = check_coeff_lower_bounds(f)
    elif args.check == "boolean-repair":
        if args.s is None:
            raise AbsparseError("--s is required for boolean-repair")
        report = check_boolean_repair(f, args.s)
    elif args.check == "norm-products":
        report = check_norm_products(args.trials, rng)
    elif args.check == "bucket-stats":
        spec = GroupSpec.single(args.p or 3, args.n or 4)
        report = stat_bucket_properties(spec, args.t or 2, args.trials, rng)
    elif args.check == "estimator-concentration":
        report = stat_estimator_concentration(f, args.t or 2,
                                              Fraction(args.tau or "1/10"),
                                              args.reps, rng,
                                              m_override=args.m_override)
    elif args.check == "small-coefficient-family":
        report = check_small_coefficient_family(args.p or 5, args.n or 2)
    else:
        raise AbsparseError(f"unknown check {args.check!r}")
    env = _envelope("verify", digest, args.seed, {"check": args.check}, report.to_json())
    _emit(args, env, f"{report.check}: {report.verdict}")
    if report.verdict in ("pass", "certified-mu-close", "informational"):
        return EXIT_OK
    if report.verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


def _time_call(fn, repeats: int = 3) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cmd_bench(args) -> int:
    """Timing comparison: exact vs staged transform, compiled vs fallback
    kernel, and naive vs transform-based bucket estimation."""
    spec = GroupSpec.single(args.p, args.n)
    rng = _rng(args.seed)
    from .families import random_function

    f = random_function(spec, rng)
    active, avail = backends()

    timings: dict = {"backend_active": active, "backends_available": avail,
                     "group": f"Z_{args.p}^{args.n}"}
    timings["dft_exact_s"] = _time_call(lambda: dft_exact(f), args.repeats)
    timings["dft_kronecker_s"] = _time_call(lambda: dft_kronecker(f), args.repeats)
    timings["speedup_exact_over_kronecker"] = (
        timings["dft_exact_s"] / timings["dft_kronecker_s"])

    if "compiled" in avail and active == "compiled":
        import subprocess

        code = ("import time,numpy as np\n"
                "from absparse.groups import GroupSpec\n"
                "from absparse.families import random_function\n"
                "from absparse.spectrum import dft_kronecker\n"
                f"spec=GroupSpec.single({args.p},{args.n})\n"
                f"rng=np.random.Generator(np.random.PCG64(np.random.SeedSequence({args.seed})))\n"
                "f=random_function(spec,rng)\n"
                "best=min((lambda t0=time.perf_counter(): (dft_kronecker(f), time.perf_counter()-t0)[1])()"
                f" for _ in range({args.repeats}))\n"
                "print(best)")
        env = dict(os.environ, ABSPARSE_PURE="1")
        out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                             text=True, env=env)
        if out.returncode == 0:
            timings["dft_kronecker_python_s"] = float(out.stdout.strip())
            timings["speedup_compiled_over_python"] = (
                timings["dft_kronecker_python_s"] / timings["dft_kronecker_s"])

    # bucket estimation: naive per-bucket loop vs all-buckets transform
    lspec = GroupSpec.single(args.p, min(3, args.n))
    m = 2000
    cs = [int(c) for c in rng.integers(0, lspec.order, size=m)]
    ws = [int(w) for w in rng.choice((-1, 1), size=m)]
    u = lspec.zero()
    timings["estimate_naive_s"] = _time_call(
        lambda: naive_bucket_numerators(lspec, cs, ws, u), args.repeats)
    timings["estimate_fast_s"] = _time_call(
        lambda: estimate_all_buckets_fast(lspec, cs, ws, u), args.repeats)
    timings["speedup_estimate"] = timings["estimate_naive_s"] / timings["estimate_fast_s"]

    env_out = _envelope("bench", "", args.seed,
                        {"p": args.p, "n": args.n, "repeats": args.repeats}, timings)
    human = (f"dft_exact {timings['dft_exact_s']:.4f}s vs dft_kronecker "
             f"{timings['dft_kronecker_s']:.4f}s "
             f"({timings['speedup_exact_over_kronecker']:.1f}x); "
             f"estimator naive/fast {timings['speedup_estimate']:.1f}x")
    _emit(args, env_out, human)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="absparse", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, with_input=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", action="store_true", help="emit the JSON envelope")
        if with_input:
            sp.add_argument("input", nargs="?", default="-",
                            help="function file (default: stdin)")

    g = sub.add_parser("gen", help="emit a family member as a function file")
    g.add_argument("--family", choices=FAMILY_NAMES, required=True)
    g.add_argument("--p", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--subspace-dim", type=int, dest="subspace_dim")
    g.add_argument("--out")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(fn=_cmd_gen)

    a = sub.add_parser("analyze", help="spectrum summary")
    common(a)
    a.set_defaults(fn=_cmd_analyze)

    tr = sub.add_parser("transform", help="full exact spectrum")
    common(tr)
    tr.set_defaults(fn=_cmd_transform)

    t = sub.add_parser("test", help="sparsity test")
    common(t)
    t.add_argument("--s", type=int, required=True)
    t.add_argument("--epsilon", default="1/2")
    t.add_argument("--backend", choices=("exact", "sampling"), default="exact")
    t.add_argument("--override-t", type=int, dest="override_t")
    t.add_argument("--override-tau", dest="override_tau")
    t.add_argument("--override-M", type=int, dest="override_M")
    t.set_defaults(fn=_cmd_test)

    v = sub.add_parser("verify", help="run a structural or statistical checker")
    common(v)
    v.add_argument("--check", choices=_CHECK_NAMES, required=True)
    v.add_argument("--s", type=int)
    v.add_argument("--p", type=int)
    v.add_argument("--n", type=int)
    v.add_argument("--t", type=int)
    v.add_argument("--tau")
    v.add_argument("--trials", type=int, default=10000)
    v.add_argument("--reps", type=int, default=200)
    v.add_argument("--M", type=int, dest="m_override")
    v.set_defaults(fn=_cmd_verify)

    b = sub.add_parser("bench", help="compare transform and estimator paths")
    b.add_argument("--p", type=int, default=3)
    b.add_argument("--n", type=int, default=5)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--json", action="store_true")
    b.set_defaults(fn=_cmd_bench)

    return ap


def dispatch(argv) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not hasattr(args, "json"):
        args.json = False
    try:
        return args.fn(args)
    except FunctionFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AbsparseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
