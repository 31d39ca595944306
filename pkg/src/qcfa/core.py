"""Two-way finite automata with quantum and classical states: the model.

A machine is the 9-tuple (Q, S, Sigma, Theta, delta, q0, s0, S_acc,
S_rej).  Each step reads the scanned tape symbol, applies the quantum
action Theta(s, sigma) (a unitary or an orthogonal measurement), then
moves the classical state and tape head according to delta(s, sigma),
keyed by the measurement result when there is one.  The tape holds the
input between a left and a right end-marker and the head is classical.

``MachineSpec`` and ``Configuration`` are immutable values, safe to
share across threads; ``step`` is a pure function of (spec, config,
random draw).  The only stateful object is the caller-owned random
source, which is consumed one 64-bit draw per measurement.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from mpmath import mp

from .errors import ExactnessError, InvalidInputError, SemanticsError
from .states import (
    PREC,
    ExactState,
    FloatState,
    RotorState,
    Sqrt2Rational,
    build_sampler,
    to_mpc,
)

__all__ = [
    "LEFT_MARKER",
    "RIGHT_MARKER",
    "Unitary",
    "PlanarRotation",
    "Measurement",
    "Action",
    "QuantumState",
    "MachineSpec",
    "Configuration",
    "Terminal",
    "Verdict",
    "Outcome",
    "ValidationReport",
    "validate_machine",
    "initial_configuration",
    "step",
    "step_detail",
]

LEFT_MARKER = "^"
RIGHT_MARKER = "$"

MOVES = (-1, 0, 1)

BACKENDS = ("exact", "rotor", "float")

_STATE_CLASSES = {"exact": ExactState, "rotor": RotorState, "float": FloatState}


@dataclass(frozen=True)
class Unitary:
    """Explicit square matrix action on the quantum register.

    Entries may be exact (int, Fraction, Sqrt2Rational) or floating
    (float, complex, mpf, mpc); validation checks U*U = I exactly for
    exact entries and entrywise to 1e-12 otherwise.
    """

    matrix: tuple[tuple, ...]

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(e, (int, Fraction, Sqrt2Rational))
            for row in self.matrix
            for e in row
        )


@dataclass(frozen=True)
class PlanarRotation:
    """Rotation by pi*(sqrt2_units*sqrt2 + quarter_units/4) in one plane.

    The angle is stored symbolically so irrational rotation counts stay
    exact; basis vector ``plane[0]`` turns toward ``plane[1]``.
    """

    plane: tuple[int, int]
    sqrt2_units: int = 0
    quarter_units: int = 0


@dataclass(frozen=True)
class Measurement:
    """Orthogonal measurement, as a basis partition or projector list.

    ``groups`` holds disjoint index sets covering the quantum basis; the
    outcome index follows group order.  Explicit projector matrices are
    a library-level alternative (machine files only carry partitions).
    """

    groups: tuple[tuple[int, ...], ...] = ()
    projectors: tuple[tuple[tuple, ...], ...] = ()

    @property
    def n_outcomes(self) -> int:
        return len(self.groups) if self.groups else len(self.projectors)


Action = Union[Unitary, PlanarRotation, Measurement]

# The register state: exact field vector, exact rotor, or complex floats.
# All three expose the same norm/rotation/measurement surface.
QuantumState = Union[ExactState, RotorState, FloatState]

# delta entry: (next_state, move) for unitary actions,
# a tuple of (next_state, move) per outcome for measurements.
UniMove = tuple[str, int]


@dataclass(frozen=True)
class MachineSpec:
    name: str
    quantum_states: tuple[str, ...]
    classical_states: tuple[str, ...]
    input_alphabet: tuple[str, ...]
    initial_quantum: str
    initial_classical: str
    accepting: frozenset[str]
    rejecting: frozenset[str]
    actions: dict[str, Action]
    theta: dict[tuple[str, str], str]
    delta: dict[tuple[str, str], Union[UniMove, tuple[UniMove, ...]]]
    backend: str = "exact"
    pass_marker: str | None = None

    @property
    def tape_alphabet(self) -> tuple[str, ...]:
        return self.input_alphabet + (LEFT_MARKER, RIGHT_MARKER)

    @property
    def halting(self) -> frozenset[str]:
        return self.accepting | self.rejecting

    def is_halting(self, s: str) -> bool:
        return s in self.accepting or s in self.rejecting

    def quantum_index(self, name: str) -> int:
        return self.quantum_states.index(name)


@dataclass(frozen=True)
class Configuration:
    """One machine snapshot: tape, classical state, head, register."""

    tape: str
    classical_state: str
    head: int
    quantum: object
    step_count: int = 0

    @property
    def scanned(self) -> str:
        return self.tape[self.head]


class Verdict(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    STEP_CAP_EXCEEDED = "step_cap_exceeded"


@dataclass(frozen=True)
class Terminal:
    verdict: Verdict


@dataclass(frozen=True)
class Outcome:
    verdict: Verdict
    steps_used: int
    passes_completed: int


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_failed(self) -> None:
        if self.violations:
            raise SemanticsError(
                "invalid machine: " + "; ".join(self.violations)
            )


def _check_unitary_exact(matrix, tag, violations):
    n = len(matrix)
    rows = [[Sqrt2Rational(e) if not isinstance(e, Sqrt2Rational) else e
             for e in row] for row in matrix]
    for i in range(n):
        for j in range(n):
            dot = Sqrt2Rational(0)
            for k in range(n):
                dot = dot + rows[k][i] * rows[k][j]
            expect = Sqrt2Rational(1 if i == j else 0)
            if dot != expect:
                violations.append(
                    f"action {tag}: U^T U != I at entry ({i},{j})"
                )
                return


def _check_unitary_float(matrix, tag, violations):
    n = len(matrix)
    with mp.workprec(PREC):
        m = [[to_mpc(e) for e in row] for row in matrix]
        for i in range(n):
            for j in range(n):
                dot = mp.mpc(0)
                for k in range(n):
                    dot += mp.conj(m[k][i]) * m[k][j]
                expect = 1 if i == j else 0
                if abs(dot - expect) >= mp.mpf("1e-12"):
                    violations.append(
                        f"action {tag}: U+U deviates from I at ({i},{j}) "
                        f"by {mp.nstr(abs(dot - expect), 3)}"
                    )
                    return


def _check_projectors(meas, dim, tag, violations):
    with mp.workprec(PREC):
        ps = [[[to_mpc(e) for e in row] for row in p]
              for p in meas.projectors]
        tol = mp.mpf("1e-12")

        def mat_mul(x, y):
            return [[mp.fsum(x[i][k] * y[k][j] for k in range(dim))
                     for j in range(dim)] for i in range(dim)]

        for a, p in enumerate(ps):
            for i in range(dim):
                for j in range(dim):
                    if abs(p[i][j] - mp.conj(p[j][i])) >= tol:
                        violations.append(
                            f"action {tag}: projector {a} not Hermitian")
                        return
            sq = mat_mul(p, p)
            if any(abs(sq[i][j] - p[i][j]) >= tol
                   for i in range(dim) for j in range(dim)):
                violations.append(f"action {tag}: projector {a} not idempotent")
                return
        for a in range(len(ps)):
            for b in range(a + 1, len(ps)):
                prod = mat_mul(ps[a], ps[b])
                if any(abs(prod[i][j]) >= tol
                       for i in range(dim) for j in range(dim)):
                    violations.append(
                        f"action {tag}: projectors {a},{b} not orthogonal")
                    return
        for i in range(dim):
            for j in range(dim):
                total = mp.fsum(p[i][j] for p in ps)
                if abs(total - (1 if i == j else 0)) >= tol:
                    violations.append(
                        f"action {tag}: projectors do not sum to I")
                    return


def validate_machine(spec: MachineSpec) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors."""
    v: list[str] = []
    Q, S = spec.quantum_states, spec.classical_states
    dim = len(Q)

    if len(set(Q)) != len(Q):
        v.append("duplicate quantum state names")
    if len(set(S)) != len(S):
        v.append("duplicate classical state names")
    if spec.initial_quantum not in Q:
        v.append(f"initial quantum state {spec.initial_quantum!r} not in Q")
    if spec.initial_classical not in S:
        v.append(f"initial classical state {spec.initial_classical!r} not in S")
    if not spec.accepting <= set(S):
        v.append("accepting states not a subset of S")
    if not spec.rejecting <= set(S):
        v.append("rejecting states not a subset of S")
    if spec.accepting & spec.rejecting:
        v.append("accepting and rejecting states overlap")
    if spec.backend not in BACKENDS:
        v.append(f"unknown backend {spec.backend!r}")
    if spec.pass_marker is not None and spec.pass_marker not in S:
        v.append(f"pass marker {spec.pass_marker!r} not in S")
    for sym in spec.input_alphabet:
        if sym in (LEFT_MARKER, RIGHT_MARKER):
            v.append(f"input alphabet may not contain marker {sym!r}")
        if len(sym) != 1:
            v.append(f"input symbols are single characters, got {sym!r}")

    for tag, action in spec.actions.items():
        if isinstance(action, Unitary):
            if len(action.matrix) != dim or any(
                len(row) != dim for row in action.matrix
            ):
                v.append(f"action {tag}: matrix is not {dim}x{dim}")
                continue
            if action.is_exact:
                _check_unitary_exact(action.matrix, tag, v)
            else:
                _check_unitary_float(action.matrix, tag, v)
        elif isinstance(action, PlanarRotation):
            i, j = action.plane
            if not (0 <= i < dim and 0 <= j < dim and i != j):
                v.append(f"action {tag}: bad rotation plane {action.plane}")
            if spec.backend == "rotor" and action.plane != (0, 1):
                v.append(f"action {tag}: rotor backend rotates in (0, 1)")
        elif isinstance(action, Measurement):
            if bool(action.groups) == bool(action.projectors):
                v.append(
                    f"action {tag}: exactly one of groups/projectors required")
                continue
            if action.groups:
                seen: set[int] = set()
                for g in action.groups:
                    if not g:
                        v.append(f"action {tag}: empty measurement group")
                    for i in g:
                        if not 0 <= i < dim:
                            v.append(f"action {tag}: index {i} out of range")
                        elif i in seen:
                            v.append(
                                f"action {tag}: index {i} in two groups")
                        seen.add(i)
                if seen != set(range(dim)):
                    v.append(
                        f"action {tag}: groups do not cover the basis")
            else:
                if any(len(p) != dim or any(len(r) != dim for r in p)
                       for p in action.projectors):
                    v.append(f"action {tag}: projector shape mismatch")
                else:
                    _check_projectors(action, dim, tag, v)
        else:
            v.append(f"action {tag}: unknown action type")

    non_halting = [s for s in S if not spec.is_halting(s)]
    for s in non_halting:
        for sym in spec.tape_alphabet:
            key = (s, sym)
            if key not in spec.theta:
                v.append(f"theta undefined for ({s}, {sym})")
                continue
            tag = spec.theta[key]
            if tag not in spec.actions:
                v.append(f"({s}, {sym}): unknown action {tag!r}")
                continue
            action = spec.actions[tag]
            if key not in spec.delta:
                v.append(f"delta undefined for ({s}, {sym})")
                continue
            entry = spec.delta[key]
            if isinstance(action, Measurement):
                moves = entry
                if len(moves) != action.n_outcomes:
                    v.append(
                        f"delta for ({s}, {sym}) has {len(moves)} branches, "
                        f"measurement has {action.n_outcomes} outcomes")
                    continue
            else:
                moves = (entry,)
            if not all(isinstance(b, tuple) and len(b) == 2 for b in moves):
                v.append(f"delta for ({s}, {sym}) is malformed")
                continue
            for nxt, mv in moves:
                if nxt not in S:
                    v.append(f"delta({s}, {sym}) targets unknown state {nxt!r}")
                if mv not in MOVES:
                    v.append(f"delta({s}, {sym}) has bad move {mv}")
                if sym == LEFT_MARKER and mv == -1:
                    v.append(
                        f"delta({s}, {sym}) moves left on the left marker")
                if sym == RIGHT_MARKER and mv == 1:
                    v.append(
                        f"delta({s}, {sym}) moves right on the right marker")

    extra = set(spec.theta) - {(s, g) for s in non_halting
                               for g in spec.tape_alphabet}
    for s, g in sorted(extra):
        v.append(f"theta defined for halting or foreign pair ({s}, {g})")

    return ValidationReport(tuple(v))


def initial_configuration(spec: MachineSpec, input_str: str) -> Configuration:
    """Start-of-run snapshot: head on the left marker, register at q0."""
    alphabet = set(spec.input_alphabet)
    for ch in input_str:
        if ch not in alphabet:
            raise InvalidInputError(
                f"symbol {ch!r} not in alphabet {sorted(alphabet)}")
    tape = LEFT_MARKER + input_str + RIGHT_MARKER
    cls = _STATE_CLASSES[spec.backend]
    quantum = cls.basis(len(spec.quantum_states),
                        spec.quantum_index(spec.initial_quantum))
    return Configuration(tape, spec.initial_classical, 0, quantum, 0)


def _apply_unitary_action(action: Action, q):
    if isinstance(action, PlanarRotation):
        return q.apply_rotation(
            action.plane[0], action.plane[1],
            action.sqrt2_units, action.quarter_units,
        )
    return q.apply_matrix(action.matrix)


def measurement_weights(action: Measurement, q):
    if action.groups:
        return q.measure_group_weights(action.groups)
    return q.measure_projector_weights(action.projectors)


def collapse_state(action: Measurement, q, outcome: int):
    if action.groups:
        return q.collapse(action.groups[outcome])
    return q.collapse_projector(action.projectors[outcome])


def step_detail(spec: MachineSpec, config: Configuration, rng):
    """One step; returns (Configuration | Terminal, action_tag, outcome).

    ``outcome`` is the measurement result index, or None for unitary
    steps.  The random source is consumed only on measurements: one
    64-bit draw each, compared against exact grid thresholds.
    """
    s = config.classical_state
    if spec.is_halting(s):
        raise SemanticsError(f"step from terminal state {s!r}")
    sym = config.scanned
    key = (s, sym)
    try:
        tag = spec.theta[key]
    except KeyError:
        raise SemanticsError(f"theta undefined for ({s}, {sym})") from None
    action = spec.actions[tag]

    outcome: int | None = None
    if isinstance(action, Measurement):
        weights = measurement_weights(action, config.quantum)
        _check_weight_sum(weights)
        sampler = build_sampler(weights)
        outcome = sampler.sample(rng.next_u64())
        nxt, mv = spec.delta[key][outcome]
        if spec.is_halting(nxt):
            return _terminal(spec, nxt), tag, outcome
        quantum = collapse_state(action, config.quantum, outcome)
    else:
        quantum = _apply_unitary_action(action, config.quantum)
        nxt, mv = spec.delta[key]
        if spec.is_halting(nxt):
            return _terminal(spec, nxt), tag, outcome

    head = config.head + mv
    if not 0 <= head < len(config.tape):
        raise SemanticsError(
            f"head moved off the tape at ({s}, {sym}) -> {head}")
    new = Configuration(config.tape, nxt, head, quantum,
                        config.step_count + 1)
    return new, tag, outcome


def step(spec: MachineSpec, config: Configuration, rng):
    """One step of the operational semantics; see ``step_detail``."""
    return step_detail(spec, config, rng)[0]


def _terminal(spec: MachineSpec, state: str) -> Terminal:
    if state in spec.accepting:
        return Terminal(Verdict.ACCEPTED)
    return Terminal(Verdict.REJECTED)


def _check_weight_sum(weights) -> None:
    total = weights[0]
    for w in weights[1:]:
        total = total + w
    if isinstance(total, Fraction):
        if total != 1:
            raise ExactnessError(f"measurement weights sum to {total} != 1")
    else:
        if abs(total - 1) > 1e-9:
            raise ExactnessError(
                f"measurement weights sum to {total}, drifted past 1e-9")
