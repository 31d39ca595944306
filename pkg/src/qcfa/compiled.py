"""Exact run-graph compiler and the jitted Monte Carlo kernel.

The reference stepper is the semantic source of truth but costs
microseconds per step.  For bulk trials we exploit a structural fact of
the reference machines: on a fixed input, the set of reachable
(classical state, head, register) configurations is small and the
register component is exactly hashable (rational or rotor backends).
The run is therefore a finite graph whose measurement nodes carry the
same exact 2^64-grid thresholds the stepper would compute, and a trial
is a table-driven walk consuming one 64-bit draw per measurement node.

Because thresholds, draw stream and pass counting are shared with the
stepper, a compiled trial reproduces the reference trial bit for bit
for equal seeds (tested).  Machines whose register is not exactly
hashable (the floating backend), or whose reachable graph exceeds the
node budget, refuse to compile and fall back to the stepper.

Register states are keyed up to overall sign: a global sign is
unobservable, and folding it keeps graphs from doubling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    MachineSpec,
    Measurement,
    collapse_state,
    initial_configuration,
    measurement_weights,
)
from .core import _apply_unitary_action  # shared single-step semantics
from .errors import CompileError
from .states import ExactState, build_sampler

__all__ = ["CompiledRun", "compile_run", "run_compiled_batch"]

ACCEPT_CODE = -1
REJECT_CODE = -2

KIND_UNITARY = 0
KIND_MEASURE = 1

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """The splitmix64 avalanche finalizer (public-domain constant set)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def trial_seed(master_seed: int, index: int) -> int:
    """Documented per-trial seed split: mix64(master xor (i+1)*golden)."""
    return mix64((master_seed ^ ((index + 1) * GOLDEN)) & MASK64)


@dataclass(frozen=True)
class CompiledRun:
    """Flattened run graph for one (machine, input) pair."""

    kind: np.ndarray        # int8[nodes]
    uni_next: np.ndarray    # int32[nodes]; node id or terminal code
    m_off: np.ndarray       # int32[nodes+1] into the threshold arrays
    m_thresh: np.ndarray    # uint64; cut points, last slot per node unused
    m_next: np.ndarray      # int32; node id or terminal code per kept outcome
    pass_mask: np.ndarray   # uint8[nodes]
    start: int
    n_nodes: int


def _canonical(q):
    key = q.key()
    if key is None:
        raise CompileError("register state is not exactly hashable")
    if isinstance(q, ExactState):
        for a in q.amps:
            s = a.sign()
            if s < 0:
                return key, ExactState(tuple(-x for x in q.amps))
            if s != 0:
                break
    return key, q


def compile_run(spec: MachineSpec, input_str: str,
                max_nodes: int = 500_000) -> CompiledRun:
    """Enumerate the exact reachable configuration graph of one input."""
    init = initial_configuration(spec, input_str)
    tape = init.tape
    key0, q0 = _canonical(init.quantum)

    ids: dict = {}
    work: list = []

    def intern(state: str, head: int, q) -> int:
        k, qc = _canonical(q)
        node_key = (state, head, k)
        nid = ids.get(node_key)
        if nid is None:
            nid = len(work)
            if nid >= max_nodes:
                raise CompileError(
                    f"reachable graph exceeds {max_nodes} nodes; "
                    "this machine/input pair is not compiled")
            ids[node_key] = nid
            work.append((state, head, qc, None))
        return nid

    start = intern(init.classical_state, 0, q0)

    kind: list[int] = []
    uni_next: list[int] = []
    meas_slots: list[list[tuple[int, int]]] = []
    pass_mask: list[int] = []

    i = 0
    while i < len(work):
        state, head, q, _ = work[i]
        sym = tape[head]
        tag = spec.theta.get((state, sym))
        if tag is None:
            raise CompileError(f"theta undefined for ({state}, {sym})")
        action = spec.actions[tag]
        pass_mask.append(
            1 if (spec.pass_marker == state and head == 0) else 0)

        if isinstance(action, Measurement):
            weights = measurement_weights(action, q)
            sampler = build_sampler(weights)
            branches = spec.delta[(state, sym)]
            slots: list[tuple[int, int]] = []
            cuts = sampler.thresholds + ((1 << 64) - 1,)
            for cut, outcome in zip(cuts, sampler.outcomes):
                nxt, mv = branches[outcome]
                if nxt in spec.accepting:
                    target = ACCEPT_CODE
                elif nxt in spec.rejecting:
                    target = REJECT_CODE
                else:
                    q2 = collapse_state(action, q, outcome)
                    target = intern(nxt, head + mv, q2)
                slots.append((cut, target))
            kind.append(KIND_MEASURE)
            uni_next.append(0)
            meas_slots.append(slots)
        else:
            q2 = _apply_unitary_action(action, q)
            nxt, mv = spec.delta[(state, sym)]
            if nxt in spec.accepting:
                target = ACCEPT_CODE
            elif nxt in spec.rejecting:
                target = REJECT_CODE
            else:
                target = intern(nxt, head + mv, q2)
            kind.append(KIND_UNITARY)
            uni_next.append(target)
            meas_slots.append([])
        i += 1

    n = len(work)
    m_off = np.zeros(n + 1, dtype=np.int32)
    flat_t: list[int] = []
    flat_n: list[int] = []
    for node in range(n):
        m_off[node] = len(flat_t)
        for cut, target in meas_slots[node]:
            flat_t.append(cut)
            flat_n.append(target)
    m_off[n] = len(flat_t)

    return CompiledRun(
        kind=np.asarray(kind, dtype=np.int8),
        uni_next=np.asarray(uni_next, dtype=np.int32),
        m_off=m_off,
        m_thresh=np.asarray(flat_t, dtype=np.uint64),
        m_next=np.asarray(flat_n, dtype=np.int32),
        pass_mask=np.asarray(pass_mask, dtype=np.uint8),
        start=start,
        n_nodes=n,
    )


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _python_batch(run: CompiledRun, trials: int, master_seed: int,
                  step_cap: int):
    """Pure-python graph walk; same semantics as the jitted kernel."""
    kind = run.kind
    uni_next = run.uni_next
    m_off = run.m_off
    m_thresh = run.m_thresh
    m_next = run.m_next
    pass_mask = run.pass_mask
    verdicts = np.zeros(trials, dtype=np.int8)
    steps_arr = np.zeros(trials, dtype=np.int64)
    passes_arr = np.zeros(trials, dtype=np.int64)
    for t in range(trials):
        state = trial_seed(master_seed, t)
        node = run.start
        steps = 0
        passes = int(pass_mask[node])
        code = 0
        while steps < step_cap:
            steps += 1
            if kind[node] == KIND_UNITARY:
                nxt = int(uni_next[node])
            else:
                state = (state + GOLDEN) & MASK64
                u = mix64(state)
                i = int(m_off[node])
                last = int(m_off[node + 1]) - 1
                while i < last and u >= int(m_thresh[i]):
                    i += 1
                nxt = int(m_next[i])
            if nxt < 0:
                code = nxt
                break
            passes += int(pass_mask[nxt])
            node = nxt
        verdicts[t] = code
        steps_arr[t] = steps
        passes_arr[t] = passes
    return verdicts, steps_arr, passes_arr


_jitted_batch = None


def _get_jitted_batch():
    global _jitted_batch
    if _jitted_batch is None:
        from numba import njit

        G = np.uint64(GOLDEN)
        C1 = np.uint64(0xBF58476D1CE4E5B9)
        C2 = np.uint64(0x94D049BB133111EB)

        @njit(cache=True)
        def batch(kind, uni_next, m_off, m_thresh, m_next, pass_mask,
                  start, trials, master_seed, step_cap):
            verdicts = np.zeros(trials, dtype=np.int8)
            steps_arr = np.zeros(trials, dtype=np.int64)
            passes_arr = np.zeros(trials, dtype=np.int64)
            for t in range(trials):
                z = (master_seed ^ (np.uint64(t + 1) * G))
                z = (z ^ (z >> np.uint64(30))) * C1
                z = (z ^ (z >> np.uint64(27))) * C2
                state = z ^ (z >> np.uint64(31))
                node = start
                steps = 0
                passes = np.int64(pass_mask[node])
                code = np.int8(0)
                while steps < step_cap:
                    steps += 1
                    if kind[node] == 0:
                        nxt = uni_next[node]
                    else:
                        state = state + G
                        z = state
                        z = (z ^ (z >> np.uint64(30))) * C1
                        z = (z ^ (z >> np.uint64(27))) * C2
                        u = z ^ (z >> np.uint64(31))
                        i = m_off[node]
                        last = m_off[node + 1] - 1
                        while i < last and u >= m_thresh[i]:
                            i += 1
                        nxt = m_next[i]
                    if nxt < 0:
                        code = np.int8(nxt)
                        break
                    passes += np.int64(pass_mask[nxt])
                    node = nxt
                verdicts[t] = code
                steps_arr[t] = steps
                passes_arr[t] = passes
            return verdicts, steps_arr, passes_arr

        _jitted_batch = batch
    return _jitted_batch


def run_compiled_batch(run: CompiledRun, trials: int, master_seed: int,
                       step_cap: int, jit: bool = True):
    """Run trials over a compiled graph; returns (verdicts, steps, passes).

    Verdict codes: -1 accepted, -2 rejected, 0 step cap exceeded.
    """
    if jit:
        try:
            kernel = _get_jitted_batch()
        except ImportError:
            kernel = None
        if kernel is not None:
            return kernel(
                run.kind, run.uni_next, run.m_off, run.m_thresh,
                run.m_next, run.pass_mask, run.start, trials,
                np.uint64(master_seed & MASK64), step_cap,
            )
    return _python_batch(run, trials, master_seed, step_cap)
