"""Command-line entry point.

Subcommands: build, validate, run, trace, analyze, verify, scaling.
Every pipeline is a thin wrapper over the library calls with the same
arguments and seed.  Exact probabilities print as rational strings and
15-significant-digit decimals.  Exit codes: 0 success, 1 verification
failure, 2 usage error, 3 resource cap.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from mpmath import mp

from .analysis import (
    absorbing_hit_probability,
    aggregate_halting,
    anbn_pass_probs,
    both_preimage_classes,
    fit_runtime_exponent,
    gap_bound_holds,
    palindrome_pass_probs,
    verify_k_closure,
    verify_separation,
    walk_hit_probability,
)
from .core import validate_machine
from .engine import default_step_cap, run_trials, trace as run_trace
from .errors import QcfaError, ResourceError
from .exact_linalg import in_K
from .machine_io import load_machine, save_machine
from .zoo import BUILDERS, derived_k

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _decimal(x) -> str:
    with mp.workprec(64):
        if isinstance(x, Fraction):
            return mp.nstr(mp.mpf(x.numerator) / x.denominator, 15)
        return mp.nstr(mp.mpf(x), 15)


def _exact_str(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return _decimal(x)


def _add_machine_args(p, with_input=True):
    p.add_argument("--machine", choices=sorted(BUILDERS),
                   help="builder name")
    p.add_argument("--epsilon", type=float, default=0.01,
                   help="error bound for a builder machine")
    p.add_argument("--machine-file", help="machine spec file")
    if with_input:
        p.add_argument("--input", required=True, help="input word")


def _resolve_machine(args):
    if args.machine_file:
        spec = load_machine(args.machine_file)
    elif args.machine:
        spec = BUILDERS[args.machine](args.epsilon)
    else:
        raise QcfaError("give --machine or --machine-file")
    validate_machine(spec).raise_if_failed()
    return spec


def cmd_build(args) -> int:
    spec = BUILDERS[args.machine](args.epsilon)
    validate_machine(spec).raise_if_failed()
    save_machine(spec, args.out)
    print(f"wrote {args.out}")
    print(f"k={derived_k(args.machine, args.epsilon)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = load_machine(args.machine_file)
    report = validate_machine(spec)
    if report.ok:
        print(f"ok: {spec.name} is a valid machine")
        return EXIT_OK
    for violation in report.violations:
        print(f"violation: {violation}")
    return EXIT_VERIFY_FAILED


def cmd_run(args) -> int:
    spec = _resolve_machine(args)
    cap = args.step_cap or default_step_cap(len(args.input))
    stats = run_trials(spec, args.input, args.trials, args.seed,
                       step_cap=cap, engine=args.engine)
    if args.format == "json":
        print(json.dumps({
            "machine": spec.name, "input": args.input,
            "trials": stats.trials, "accepted": stats.accepted,
            "rejected": stats.rejected, "capped": stats.capped,
            "mean_steps": stats.mean_steps,
            "variance_steps": stats.variance_steps, "seed": stats.seed,
        }))
    else:
        print("trials,accepted,rejected,capped,mean_steps,"
              "variance_steps,seed")
        print(f"{stats.trials},{stats.accepted},{stats.rejected},"
              f"{stats.capped},{stats.mean_steps!r},"
              f"{stats.variance_steps!r},{stats.seed}")
    return EXIT_OK


def cmd_trace(args) -> int:
    spec = _resolve_machine(args)
    tr = run_trace(spec, args.input, args.seed, max_steps=args.max_steps)
    print("step,state,head,action,outcome")
    for row in tr.steps:
        out = "" if row.outcome is None else row.outcome
        print(f"{row.index},{row.classical_state},{row.head},"
              f"{row.action},{out}")
    print(f"# verdict: {tr.verdict.value if tr.verdict else 'still running'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    word = args.input
    rows = []
    if args.machine == "palindrome3":
        k = derived_k("palindrome3", args.epsilon)
        probs = palindrome_pass_probs(word, k)
        agg = aggregate_halting(probs)
        rows.append(("k", Fraction(k)))
    elif args.machine == "anbn":
        n = len(word) - len(word.lstrip("a"))
        n_prime = len(word) - len(word.rstrip("b"))
        if word != "a" * n + "b" * n_prime:
            raise QcfaError(
                "analyze for the counting machine needs a^n b^m input "
                "(other words are rejected in the classical shape check)")
        k = derived_k("anbn", args.epsilon)
        probs = anbn_pass_probs(n, n_prime, k)
        agg = aggregate_halting(probs)
        rows.append(("k", Fraction(k)))
    else:
        raise QcfaError("analyze supports palindrome3 and anbn")
    rows += [
        ("p_rej", probs.p_rej),
        ("p_acc", probs.p_acc),
        ("reject", agg.reject_probability),
        ("accept", agg.accept_probability),
        ("expected_iterations", agg.expected_iterations),
    ]
    print("quantity,exact,decimal")
    for name, value in rows:
        print(f"{name},{_exact_str(value)},{_decimal(value)}")
    return EXIT_OK


class _CorruptMatrix:
    """Negative-control transform: deliberately not orthogonal mod 5."""

    tag = "B_corrupt"
    rows = ((4, 0, 3), (0, 5, 1), (-3, 0, 4))

    def mul_vec_mod(self, v, mod):
        return tuple(
            sum(self.rows[i][j] * v[j] for j in range(3)) % mod
            for i in range(3)
        )


def cmd_verify(args) -> int:
    failures = 0

    def report(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        if not ok:
            failures += 1
        tail = f"  {detail}" if detail else ""
        print(f"{'PASS' if ok else 'FAIL'}  {name}{tail}")

    matrices = None
    if args.corrupt:
        from .exact_linalg import MAT_A
        matrices = (MAT_A, _CorruptMatrix())

    report("residue-set closure under both transforms (125 triples)",
           verify_k_closure(matrices))

    rng = random.Random(args.seed)
    classes = both_preimage_classes()
    bad = 0
    for _ in range(1000):
        base = rng.choice(classes)
        u = tuple(b + 25 * rng.randint(-10**6, 10**6) for b in base)
        if in_K(u):
            bad += 1
    report("double-preimage vectors avoid the residue set (1000 samples)",
           bad == 0)

    sep = verify_separation(args.n_max)
    report(f"word separation, lengths <= {args.n_max} "
           f"({sep.pairs_checked} pairs)", sep.ok,
           "" if sep.ok else sep.violations[0])

    gap_ok = all(
        gap_bound_holds(d) and gap_bound_holds(-d)
        for d in range(1, args.gap_max + 1)
    )
    report(f"rotation gap >= 1/(2 d^2) for 1 <= |d| <= {args.gap_max}",
           gap_ok)

    walk_ok = all(
        walk_hit_probability(n) == absorbing_hit_probability(n)
        == Fraction(1, n)
        for n in range(1, 65)
    )
    report("walk hitting law matches the exact linear solve (N <= 64)",
           walk_ok)

    return EXIT_OK if failures == 0 else EXIT_VERIFY_FAILED


def cmd_scaling(args) -> int:
    lengths = [int(t) for t in args.lengths.split(",")]
    if len(lengths) < 2:
        raise QcfaError("scaling needs at least 2 lengths")
    if any(m % 2 for m in lengths):
        raise QcfaError("lengths must be even (inputs are a^(m/2) b^(m/2))")
    k = derived_k("anbn", args.epsilon)
    projected = sum(
        args.trials * (2**k) * (m + 1) ** 2 * (7 * m + 25) for m in lengths)
    if projected > args.budget:
        raise ResourceError(
            f"projected {projected:.2e} steps exceed budget {args.budget:.2e}")
    spec = BUILDERS["anbn"](args.epsilon)
    print("m,mean_steps")
    means = []
    for m in lengths:
        word = "a" * (m // 2) + "b" * (m // 2)
        stats = run_trials(spec, word, args.trials, args.seed,
                           step_cap=args.step_cap or default_step_cap(m))
        means.append(stats.mean_steps)
        print(f"{m},{stats.mean_steps!r}")
    slope = fit_runtime_exponent(lengths, means)
    print(f"# fitted_exponent={slope!r}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="qcfa",
        description="two-way quantum/classical automata: build, simulate, "
                    "verify")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a builder machine to a file")
    p.add_argument("--machine", required=True, choices=sorted(BUILDERS))
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("validate", help="check a machine file")
    p.add_argument("--machine-file", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="seeded Monte Carlo trials")
    _add_machine_args(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-cap", type=int, default=0)
    p.add_argument("--engine", default="auto",
                   choices=("auto", "compiled", "reference"))
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("trace", help="step-by-step log of one run")
    _add_machine_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=1000)
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("analyze",
                       help="exact per-pass and aggregate probabilities")
    p.add_argument("--machine", required=True)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--input", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("verify", help="run every closed-form check")
    p.add_argument("--n-max", type=int, default=6,
                   help="word-separation sweep depth")
    p.add_argument("--gap-max", type=int, default=10_000,
                   help="rotation-gap sweep bound")
    p.add_argument("--seed", type=int, default=20_240_101)
    p.add_argument("--corrupt", action="store_true",
                   help="negative control: corrupt a transform and expect "
                        "FAIL (testing aid)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("scaling", help="running-time growth experiment")
    p.add_argument("--lengths", default="4,8,16,32")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--step-cap", type=int, default=0)
    p.add_argument("--budget", type=float, default=2e9,
                   help="projected-step resource cap")
    p.set_defaults(fn=cmd_scaling)

    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (QcfaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
