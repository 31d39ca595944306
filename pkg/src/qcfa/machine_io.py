"""Textual machine-spec files: schema, parser, serializer.

A machine file is line-oriented; ``#`` starts a comment and blank lines
are ignored.  Header lines, in any order before the first action:

    format qcfa-machine-v1
    machine <name>
    backend exact|rotor|float
    pass-marker <classical state>          (optional)
    quantum-states <name> <name> ...
    initial-quantum <name>
    classical-states <name> ...
    initial-classical <name>
    accepting <name> ...
    rejecting <name> ...
    alphabet <single-char symbols> ...

Action blocks:

    action <tag> unitary
      row <entry> <entry> ...              (one line per matrix row)
    action <tag> rotation <qi> <qj> sqrt2=<int> quarters=<int>
    action <tag> measure
      group <quantum state names>          (one line per outcome, in order)

Matrix entries are exact rationals ``p/q`` or integers (parsed
bit-exactly), decimal floats (parsed at the 128-bit working precision),
or complex pairs ``(re,im)`` of decimals.  A rotation action turns the
first named basis state toward the second by pi*(sqrt2*sqrt(2) +
quarters/4); it is how irrational-angle and quarter-turn coin actions
stay exact in files.  Measurements are basis partitions only (projector
matrices are a library-level feature).

Transition rules, one per (state, symbol) pair; moves are L, S, R and
the end-markers are written ``^`` and ``$``:

    rule <state> <symbol> <action> -> <next> <move>
    rule <state> <symbol> <action> -> <next> <move> / <next> <move> ...

Measurement rules list one ``<next> <move>`` branch per outcome, in
group order.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import mpmath
from mpmath import mp

from .core import (
    MachineSpec,
    Measurement,
    PlanarRotation,
    Unitary,
)
from .errors import MachineFormatError
from .states import PREC

__all__ = ["FORMAT_TAG", "load_machine", "loads_machine",
           "dump_machine", "save_machine"]

FORMAT_TAG = "qcfa-machine-v1"

_MOVE_TO_TOKEN = {-1: "L", 0: "S", 1: "R"}
_TOKEN_TO_MOVE = {"L": -1, "S": 0, "R": 1}


def _fmt_entry(e) -> str:
    if isinstance(e, (int, Fraction)):
        return str(Fraction(e))
    if isinstance(e, mpmath.mpf):
        return mp.nstr(e, 40)
    if isinstance(e, mpmath.mpc):
        return f"({mp.nstr(e.real, 40)},{mp.nstr(e.imag, 40)})"
    if isinstance(e, float):
        return repr(e)
    if isinstance(e, complex):
        return f"({e.real!r},{e.imag!r})"
    raise MachineFormatError(
        f"matrix entry {e!r} is not serializable; machine files carry "
        "rationals, decimals and complex decimal pairs only")


def _parse_entry(tok: str):
    if tok.startswith("("):
        if not tok.endswith(")") or "," not in tok:
            raise MachineFormatError(f"bad complex entry {tok!r}")
        re_s, im_s = tok[1:-1].split(",", 1)
        with mp.workprec(PREC):
            return mp.mpc(mp.mpf(re_s), mp.mpf(im_s))
    if "/" in tok:
        num, den = tok.split("/", 1)
        return Fraction(int(num), int(den))
    try:
        return Fraction(int(tok))
    except ValueError:
        pass
    try:
        with mp.workprec(PREC):
            return mp.mpf(tok)
    except ValueError:
        raise MachineFormatError(f"bad matrix entry {tok!r}") from None


def dump_machine(spec: MachineSpec) -> str:
    """Serialize; exact entries round-trip bit for bit."""
    lines = [
        f"format {FORMAT_TAG}",
        f"machine {spec.name}",
        f"backend {spec.backend}",
    ]
    if spec.pass_marker is not None:
        lines.append(f"pass-marker {spec.pass_marker}")
    lines += [
        "quantum-states " + " ".join(spec.quantum_states),
        f"initial-quantum {spec.initial_quantum}",
        "classical-states " + " ".join(spec.classical_states),
        f"initial-classical {spec.initial_classical}",
        "accepting " + " ".join(sorted(spec.accepting)),
        "rejecting " + " ".join(sorted(spec.rejecting)),
        "alphabet " + " ".join(spec.input_alphabet),
        "",
    ]
    q_names = spec.quantum_states
    for tag, action in spec.actions.items():
        if isinstance(action, Unitary):
            lines.append(f"action {tag} unitary")
            for row in action.matrix:
                lines.append("  row " + " ".join(_fmt_entry(e) for e in row))
        elif isinstance(action, PlanarRotation):
            i, j = action.plane
            lines.append(
                f"action {tag} rotation {q_names[i]} {q_names[j]} "
                f"sqrt2={action.sqrt2_units} quarters={action.quarter_units}")
        elif isinstance(action, Measurement):
            if not action.groups:
                raise MachineFormatError(
                    f"action {tag}: projector measurements are library-only")
            lines.append(f"action {tag} measure")
            for g in action.groups:
                lines.append("  group " + " ".join(q_names[i] for i in g))
        else:
            raise MachineFormatError(f"action {tag}: unknown kind")
    lines.append("")

    for s in spec.classical_states:
        for sym in spec.tape_alphabet:
            key = (s, sym)
            if key not in spec.theta:
                continue
            tag = spec.theta[key]
            entry = spec.delta[key]
            action = spec.actions[tag]
            if isinstance(action, Measurement):
                branches = " / ".join(
                    f"{nxt} {_MOVE_TO_TOKEN[mv]}" for nxt, mv in entry)
            else:
                nxt, mv = entry
                branches = f"{nxt} {_MOVE_TO_TOKEN[mv]}"
            lines.append(f"rule {s} {sym} {tag} -> {branches}")
    lines.append("")
    return "\n".join(lines)


def save_machine(spec: MachineSpec, path) -> None:
    Path(path).write_text(dump_machine(spec))


def loads_machine(text: str) -> MachineSpec:
    """Parse a machine file body into a MachineSpec (not yet validated)."""
    header: dict[str, list[str]] = {}
    actions: dict[str, object] = {}
    theta: dict = {}
    delta: dict = {}
    pending: dict | None = None  # action block being accumulated
    q_index: dict[str, int] = {}

    def close_pending():
        nonlocal pending
        if pending is None:
            return
        tag = pending["tag"]
        if pending["kind"] == "unitary":
            if not pending["rows"]:
                raise MachineFormatError(f"action {tag}: no matrix rows")
            actions[tag] = Unitary(tuple(pending["rows"]))
        else:
            if not pending["groups"]:
                raise MachineFormatError(f"action {tag}: no groups")
            actions[tag] = Measurement(groups=tuple(pending["groups"]))
        pending = None

    def q_idx(name: str, where: str) -> int:
        if name not in q_index:
            raise MachineFormatError(f"{where}: unknown quantum state {name!r}")
        return q_index[name]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        toks = line.split()
        kw = toks[0]
        try:
            if kw == "row":
                if pending is None or pending["kind"] != "unitary":
                    raise MachineFormatError("row outside a unitary action")
                pending["rows"].append(
                    tuple(_parse_entry(t) for t in toks[1:]))
            elif kw == "group":
                if pending is None or pending["kind"] != "measure":
                    raise MachineFormatError("group outside a measure action")
                pending["groups"].append(
                    tuple(q_idx(t, "group") for t in toks[1:]))
            elif kw == "action":
                close_pending()
                if len(toks) < 3:
                    raise MachineFormatError("action needs a tag and a kind")
                tag, kind = toks[1], toks[2]
                if not q_index:
                    raise MachineFormatError(
                        "quantum-states must precede actions")
                if kind == "unitary":
                    pending = {"tag": tag, "kind": "unitary", "rows": []}
                elif kind == "measure":
                    pending = {"tag": tag, "kind": "measure", "groups": []}
                elif kind == "rotation":
                    if len(toks) != 7:
                        raise MachineFormatError(
                            "rotation takes two states, sqrt2= and quarters=")
                    i = q_idx(toks[3], f"action {tag}")
                    j = q_idx(toks[4], f"action {tag}")
                    kv = {}
                    for t in toks[5:]:
                        k, _, v = t.partition("=")
                        kv[k] = int(v)
                    if set(kv) != {"sqrt2", "quarters"}:
                        raise MachineFormatError(
                            f"action {tag}: expected sqrt2=/quarters=")
                    actions[tag] = PlanarRotation(
                        (i, j), kv["sqrt2"], kv["quarters"])
                else:
                    raise MachineFormatError(f"unknown action kind {kind!r}")
            elif kw == "rule":
                close_pending()
                if "->" not in toks or len(toks) < 6:
                    raise MachineFormatError("malformed rule")
                arrow = toks.index("->")
                if arrow != 4:
                    raise MachineFormatError(
                        "rule head is: state symbol action ->")
                state, sym, tag = toks[1], toks[2], toks[3]
                if tag not in actions:
                    raise MachineFormatError(f"rule uses unknown action {tag!r}")
                branch_toks = " ".join(toks[arrow + 1:]).split("/")
                branches = []
                for b in branch_toks:
                    parts = b.split()
                    if len(parts) != 2 or parts[1] not in _TOKEN_TO_MOVE:
                        raise MachineFormatError(
                            f"bad rule branch {b.strip()!r}")
                    branches.append((parts[0], _TOKEN_TO_MOVE[parts[1]]))
                theta[(state, sym)] = tag
                if isinstance(actions[tag], Measurement):
                    delta[(state, sym)] = tuple(branches)
                else:
                    if len(branches) != 1:
                        raise MachineFormatError(
                            "unitary rules take exactly one branch")
                    delta[(state, sym)] = branches[0]
            else:
                close_pending()
                header[kw] = toks[1:]
                if kw == "quantum-states":
                    q_index = {name: i for i, name in enumerate(toks[1:])}
        except MachineFormatError as exc:
            raise MachineFormatError(f"line {lineno}: {exc}") from None
    close_pending()

    def need(key: str) -> list[str]:
        if key not in header:
            raise MachineFormatError(f"missing header line {key!r}")
        return header[key]

    fmt = need("format")
    if fmt != [FORMAT_TAG]:
        raise MachineFormatError(f"unsupported format {' '.join(fmt)!r}")
    backend = need("backend")
    if len(backend) != 1:
        raise MachineFormatError("backend takes one value")
    marker = header.get("pass-marker")
    if marker is not None and len(marker) != 1:
        raise MachineFormatError("pass-marker takes one state")

    return MachineSpec(
        name=" ".join(need("machine")),
        quantum_states=tuple(need("quantum-states")),
        classical_states=tuple(need("classical-states")),
        input_alphabet=tuple(need("alphabet")),
        initial_quantum=" ".join(need("initial-quantum")),
        initial_classical=" ".join(need("initial-classical")),
        accepting=frozenset(need("accepting")),
        rejecting=frozenset(need("rejecting")),
        actions=actions,
        theta=theta,
        delta=delta,
        backend=backend[0],
        pass_marker=marker[0] if marker else None,
    )


def load_machine(path) -> MachineSpec:
    return loads_machine(Path(path).read_text())
