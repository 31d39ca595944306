"""Engine: determinism, fast/reference equivalence, statistical laws."""
import math

import pytest

from qcfa.analysis import aggregate_halting, palindrome_pass_probs
from qcfa.compiled import compile_run, run_compiled_batch, trial_seed
from qcfa.core import Verdict
from qcfa.engine import (
    SplitMix64,
    default_step_cap,
    run_outcomes,
    run_trial,
    run_trials,
    trace,
)
from qcfa.errors import CompileError, QcfaError

CHI2_CRIT_1DOF_999 = 10.828  # chi-square critical value, 1 dof, alpha 1e-3


def test_same_seed_same_trace(pal3):
    a = trace(pal3, "abb", 424242, max_steps=4000)
    b = trace(pal3, "abb", 424242, max_steps=4000)
    assert a == b
    c = trace(pal3, "abb", 424243, max_steps=4000)
    assert c != a


def test_same_seed_same_outcome(anbn_machine):
    a = run_trial(anbn_machine, "aab", 7)
    b = run_trial(anbn_machine, "aab", 7)
    assert a == b


def test_single_trial_consistent_with_batch(pal3):
    stats = run_trials(pal3, "ab", 1, 99, step_cap=50_000)
    single = run_trial(pal3, "ab", trial_seed(99, 0), step_cap=50_000)
    assert stats.trials == 1
    assert stats.mean_steps == single.steps_used
    assert stats.variance_steps == 0.0
    assert (stats.accepted == 1) == (single.verdict is Verdict.ACCEPTED)


def test_counts_partition_trials(pal3, anbn_machine):
    for spec, word in ((pal3, "ab"), (anbn_machine, "abab")):
        stats = run_trials(spec, word, 500, 3, step_cap=20_000)
        assert stats.accepted + stats.rejected + stats.capped == 500


@pytest.mark.parametrize("word", ["", "a", "ab", "abba", "aabab"])
def test_compiled_equals_reference_palindrome(pal3, word):
    # short caps keep the reference side fast; equivalence must hold for
    # every verdict including the cap
    fast = run_outcomes(pal3, word, 15, 11, step_cap=4000,
                        engine="compiled")
    slow = run_outcomes(pal3, word, 15, 11, step_cap=4000,
                        engine="reference")
    assert fast == slow


@pytest.mark.parametrize("word", ["", "ab", "aabb", "aab", "ba", "bba"])
def test_compiled_equals_reference_anbn(anbn_machine, word):
    fast = run_outcomes(anbn_machine, word, 15, 5, step_cap=4000,
                        engine="compiled")
    slow = run_outcomes(anbn_machine, word, 15, 5, step_cap=4000,
                        engine="reference")
    assert fast == slow


def test_python_walker_equals_jitted_kernel(anbn_machine):
    run = compile_run(anbn_machine, "aabb")
    jit = run_compiled_batch(run, 80, 17, 30_000, jit=True)
    py = run_compiled_batch(run, 80, 17, 30_000, jit=False)
    for a, b in zip(jit, py):
        assert list(a) == list(b)


def test_unbounded_register_orbit_exceeds_node_budget():
    # a rational rotation of infinite order applied forever at one square
    # has an unbounded reachable register set; compilation must give up
    from fractions import Fraction
    from qcfa.core import (
        LEFT_MARKER, RIGHT_MARKER, MachineSpec, Measurement, PlanarRotation,
        Unitary, validate_machine)
    tilt = Unitary(((Fraction(3, 5), Fraction(-4, 5)),
                    (Fraction(4, 5), Fraction(3, 5))))
    spec = MachineSpec(
        name="orbit",
        quantum_states=("q0", "q1"),
        classical_states=("go", "acc", "rej"),
        input_alphabet=("a",),
        initial_quantum="q0",
        initial_classical="go",
        accepting=frozenset({"acc"}),
        rejecting=frozenset({"rej"}),
        actions={"tilt": tilt, "noop": PlanarRotation((0, 1), 0, 0),
                 "look": Measurement(groups=((0,), (1,)))},
        theta={("go", LEFT_MARKER): "noop", ("go", "a"): "tilt",
               ("go", RIGHT_MARKER): "look"},
        delta={("go", LEFT_MARKER): ("go", 1), ("go", "a"): ("go", 0),
               ("go", RIGHT_MARKER): (("acc", 0), ("rej", 0))},
        backend="exact",
    )
    assert validate_machine(spec).ok
    with pytest.raises(CompileError, match="exceeds"):
        compile_run(spec, "a", max_nodes=300)


def test_float_backend_refuses_to_compile(qubit_machine):
    with pytest.raises(CompileError):
        compile_run(qubit_machine, "ab")
    # auto engine falls back to the reference stepper
    outs = run_outcomes(qubit_machine, "ab", 3, 5, step_cap=3000)
    assert len(outs) == 3


def test_qubit_machine_rejects_non_palindromes(qubit_machine):
    # detection probability per pass is about a quarter of the off-axis
    # weight; a couple of thousand steps see enough passes to reject
    outs = run_outcomes(qubit_machine, "ab", 30, 8, step_cap=2500)
    rejected = sum(1 for o in outs if o.verdict is Verdict.REJECTED)
    assert rejected > 0
    assert all(o.verdict is not Verdict.ACCEPTED for o in outs)


def test_palindrome_accepted_never_rejected(pal3):
    # members never reject: the rejecting outcome has exact weight zero
    for i in range(60):
        out = run_trial(pal3, "aba", trial_seed(60, i), step_cap=1500,
                        validate=False)
        assert out.verdict is not Verdict.REJECTED
    # and a few full runs to the accepting verdict
    full = run_outcomes(pal3, "aba", 3, 61, step_cap=10**9)
    assert all(o.verdict is Verdict.ACCEPTED for o in full)


def test_anbn_rejects_bad_shape_immediately(anbn_machine):
    for seed in (0, 1, 2, 3):
        out = run_trial(anbn_machine, "ba", seed)
        assert out.verdict is Verdict.REJECTED
        assert out.steps_used == 3
        assert out.passes_completed == 0
    tr = trace(anbn_machine, "ba", 0)
    assert all(row.outcome is None for row in tr.steps)  # no measurement


def test_default_step_cap():
    assert default_step_cap(2) == 10_000 * 4**4


def test_trials_must_be_positive(pal3):
    with pytest.raises(QcfaError):
        run_outcomes(pal3, "a", 0, 1)


def test_trace_shows_pass_structure(pal3):
    tr = trace(pal3, "a", 12, max_steps=400)
    rows = tr.steps
    # a pass starts at (scan1, head 0); slice out the first full pass
    starts = [i for i, r in enumerate(rows)
              if r.classical_state == "scan1" and r.head == 0]
    first_pass = rows[starts[0]:starts[1]] if len(starts) > 1 else rows
    states = [r.classical_state for r in first_pass]
    # right sweep, rewind, inverse sweep, measurement, then the coin stage
    assert states[0] == "scan1"
    i_rewind = states.index("rewind")
    i_scan2 = states.index("scan2")
    assert i_rewind < i_scan2
    meas_rows = [r for r in first_pass if r.action == "read_out"]
    assert meas_rows, "no measurement recorded"
    assert meas_rows[0].head == 2  # at the right marker
    assert meas_rows[0].classical_state == "scan2"
    coin_states = {"land", "restore", "walkb1"} | {
        s for s in states if s.startswith(("meas", "flip"))}
    assert coin_states & set(states)


def test_trace_empty_input_skips_symbol_loop(pal3):
    tr = trace(pal3, "", 0, max_steps=200)
    assert all(row.action not in ("u_a", "u_b") for row in tr.steps)


def test_passes_counted_at_marker(pal3):
    out = run_trial(pal3, "ab", 5, step_cap=50_000)
    tr = trace(pal3, "ab", 5, max_steps=50_000)
    marker_visits = sum(
        1 for r in tr.steps
        if r.classical_state == "scan1" and r.head == 0)
    assert out.passes_completed == marker_visits
    assert tr.verdict == out.verdict


def test_seed_split_is_documented_mix(pal3):
    # batch trial i is the standalone trial with seed mix64-split from
    # the master seed
    outs = run_outcomes(pal3, "ab", 8, 12345, step_cap=40_000,
                        engine="reference")
    for i, expected in enumerate(outs):
        assert run_trial(pal3, "ab", trial_seed(12345, i),
                         step_cap=40_000) == expected


def test_splitmix_stream_reference_values():
    # splitmix64 of seed 0: first outputs of the reference algorithm
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert rng.next_u64() == 0x06C45D188009454F


def test_rejected_fraction_tracks_aggregate_law(pal3):
    # 10^5 seeded trials against the exact aggregate rejection share
    n = 100_000
    stats = run_trials(pal3, "ab", n, 777)
    agg = aggregate_halting(palindrome_pass_probs("ab", 5))
    p = float(agg.reject_probability)
    sigma = math.sqrt(p * (1 - p) / n)
    assert stats.capped == 0
    assert abs(stats.rejected / n - p) <= 3 * sigma


def test_pass_measurement_chi_square(pal3):
    # per-pass outcome counts of the loop-exit measurement on "ab"
    n = 100_000
    outs = run_outcomes(pal3, "ab", n, 4242)
    total_passes = sum(o.passes_completed for o in outs)
    rejecting = sum(1 for o in outs if o.verdict is Verdict.REJECTED)
    p = float(palindrome_pass_probs("ab", 5).p_rej)
    expected_rej = p * total_passes
    expected_cont = (1 - p) * total_passes
    chi2 = ((rejecting - expected_rej) ** 2 / expected_rej
            + (total_passes - rejecting - expected_cont) ** 2
            / expected_cont)
    assert chi2 < CHI2_CRIT_1DOF_999


def test_walk_hits_right_marker_at_expected_rate(anbn_machine):
    # first-walk absorptions on a^2 b^2: right-marker frequency ~ 1/5
    hits = total = 0
    for seed in range(40):
        tr = trace(anbn_machine, "aabb", seed, max_steps=4000)
        for row in tr.steps:
            if row.classical_state == "walk1" and row.head == 0:
                total += 1
            elif row.classical_state == "walk1" and row.head == 5:
                total += 1
                hits += 1
    p = 1 / 5
    sigma = math.sqrt(p * (1 - p) / total)
    assert total > 1500
    assert abs(hits / total - p) <= 3 * sigma


def test_member_trials_never_reject(anbn_machine):
    stats = run_trials(anbn_machine, "aabb", 1000, 31, step_cap=4000)
    assert stats.rejected == 0
