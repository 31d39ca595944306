"""Seeded Monte Carlo execution: single trials, traces, trial batches.

Reproducibility contract: the only random source is a splitmix64
stream; a run consumes exactly one 64-bit draw per measurement step.
Per-trial seeds are split from the master seed by the documented
avalanche mix (``trial_seed``), so trial i of a batch equals a
standalone ``run_trial`` with that seed, and results are independent of
execution order.  Aggregation uses counts plus exact integer sums, so
it is associative and order-insensitive by construction.

``run_trials``/``run_outcomes`` compile the machine/input pair to an
exact run graph and use the jitted walker when possible (rational and
rotor backends), falling back to the reference stepper otherwise; both
paths produce identical outcomes for identical seeds.
"""
from __future__ import annotations

from dataclasses import dataclass

from .compiled import (
    ACCEPT_CODE,
    GOLDEN,
    MASK64,
    REJECT_CODE,
    compile_run,
    mix64,
    run_compiled_batch,
    trial_seed,
)
from .core import (
    Configuration,
    MachineSpec,
    Outcome,
    Terminal,
    Verdict,
    initial_configuration,
    step_detail,
    validate_machine,
)
from .errors import CompileError, QcfaError

__all__ = [
    "SplitMix64",
    "TrialStats",
    "Trace",
    "TraceStep",
    "default_step_cap",
    "run_trial",
    "run_outcomes",
    "run_trials",
    "trace",
    "trial_seed",
]


class SplitMix64:
    """Minimal counter-based PRNG: state += golden; output = mix64(state).

    Used both as the trial stream and (via ``trial_seed``) the splitting
    function; the jitted kernel re-implements the same integer ops.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)


def default_step_cap(input_len: int) -> int:
    """10^4 (n+2)^4: orders of magnitude past the expected running time."""
    return 10_000 * (input_len + 2) ** 4


@dataclass(frozen=True)
class TrialStats:
    trials: int
    accepted: int
    rejected: int
    capped: int
    mean_steps: float
    variance_steps: float
    seed: int


@dataclass(frozen=True)
class TraceStep:
    index: int
    classical_state: str
    head: int
    action: str
    outcome: int | None


@dataclass(frozen=True)
class Trace:
    machine: str
    input: str
    seed: int
    steps: tuple[TraceStep, ...]
    verdict: Verdict | None


def _is_pass_start(spec: MachineSpec, config: Configuration) -> bool:
    return spec.pass_marker == config.classical_state and config.head == 0


def run_trial(spec: MachineSpec, input_str: str, seed: int,
              step_cap: int | None = None, validate: bool = True) -> Outcome:
    """Iterate the stepper until a verdict or the step cap; deterministic."""
    if validate:
        validate_machine(spec).raise_if_failed()
    cap = default_step_cap(len(input_str)) if step_cap is None else step_cap
    rng = SplitMix64(seed)
    cfg = initial_configuration(spec, input_str)
    passes = 1 if _is_pass_start(spec, cfg) else 0
    while cfg.step_count < cap:
        res, _, _ = step_detail(spec, cfg, rng)
        if isinstance(res, Terminal):
            return Outcome(res.verdict, cfg.step_count + 1, passes)
        cfg = res
        if _is_pass_start(spec, cfg):
            passes += 1
    return Outcome(Verdict.STEP_CAP_EXCEEDED, cfg.step_count, passes)


def trace(spec: MachineSpec, input_str: str, seed: int,
          max_steps: int = 10_000, validate: bool = True) -> Trace:
    """Like ``run_trial`` but records every transition (reference path)."""
    if validate:
        validate_machine(spec).raise_if_failed()
    rng = SplitMix64(seed)
    cfg = initial_configuration(spec, input_str)
    rows: list[TraceStep] = []
    verdict = None
    while cfg.step_count < max_steps:
        res, tag, outcome = step_detail(spec, cfg, rng)
        rows.append(TraceStep(cfg.step_count, cfg.classical_state,
                              cfg.head, tag, outcome))
        if isinstance(res, Terminal):
            verdict = res.verdict
            break
        cfg = res
    return Trace(spec.name, input_str, seed, tuple(rows), verdict)


_CODE_TO_VERDICT = {
    ACCEPT_CODE: Verdict.ACCEPTED,
    REJECT_CODE: Verdict.REJECTED,
    0: Verdict.STEP_CAP_EXCEEDED,
}


def run_outcomes(spec: MachineSpec, input_str: str, trials: int,
                 master_seed: int, step_cap: int | None = None,
                 engine: str = "auto") -> list[Outcome]:
    """Per-trial outcomes; trial i uses seed ``trial_seed(master, i)``.

    engine: "auto" compiles to the fast graph walker when the machine
    is exactly compilable, "compiled" requires it, "reference" forces
    the stepper.  All three agree bit for bit on shared seeds.
    """
    if trials < 1:
        raise QcfaError("trials must be at least 1")
    validate_machine(spec).raise_if_failed()
    cap = default_step_cap(len(input_str)) if step_cap is None else step_cap

    if engine not in ("auto", "compiled", "reference"):
        raise QcfaError(f"unknown engine {engine!r}")
    if engine != "reference":
        try:
            run = compile_run(spec, input_str)
        except CompileError:
            if engine == "compiled":
                raise
        else:
            verdicts, steps, passes = run_compiled_batch(
                run, trials, master_seed, cap)
            return [
                Outcome(_CODE_TO_VERDICT[int(v)], int(s), int(p))
                for v, s, p in zip(verdicts, steps, passes)
            ]
    return [
        run_trial(spec, input_str, trial_seed(master_seed, i), cap,
                  validate=False)
        for i in range(trials)
    ]


def run_trials(spec: MachineSpec, input_str: str, trials: int,
               master_seed: int, step_cap: int | None = None,
               engine: str = "auto") -> TrialStats:
    """Aggregate seeded trials into counts and step moments."""
    outcomes = run_outcomes(spec, input_str, trials, master_seed,
                            step_cap, engine)
    accepted = sum(1 for o in outcomes if o.verdict is Verdict.ACCEPTED)
    rejected = sum(1 for o in outcomes if o.verdict is Verdict.REJECTED)
    capped = sum(
        1 for o in outcomes if o.verdict is Verdict.STEP_CAP_EXCEEDED)
    total = sum(o.steps_used for o in outcomes)
    total_sq = sum(o.steps_used * o.steps_used for o in outcomes)
    mean = total / trials
    if trials > 1:
        variance = (total_sq - total * total / trials) / (trials - 1)
    else:
        variance = 0.0
    return TrialStats(trials, accepted, rejected, capped,
                      mean, variance, master_seed)
