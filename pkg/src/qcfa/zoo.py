"""Builders for the three reference machines, plus the qubit reduction maps.

``build_palindrome_3state``
    Recognizes palindromes over {a, b} with one-sided error.  Each pass
    scans the input applying one of two rational orthogonal transforms
    per symbol, rescans applying the inverses, and measures: any weight
    off the start vector rejects.  A coin-flip stage then accepts with
    probability 2^-(k(n+1)), so non-palindromes are rejected long before
    an accidental accept.

``build_palindrome_single_qubit``
    The same classical skeleton driving a single qubit.  The three-state
    transforms are real rotations of the unit sphere; mapping the sphere
    onto qubit states turns them into 2x2 unitaries, at the price of a
    detection probability reduced to at least a quarter of the off-axis
    weight.  The coin budget k is raised by 2 to compensate.

``build_anbn``
    Recognizes a^n b^n in polynomial expected time.  After a classical
    a*b* shape check, each pass rotates a single rotor by +sqrt(2)*pi
    per a and -sqrt(2)*pi per b; the rotations cancel exactly iff the
    counts match.  A pair of fair random walks plus k coin flips form
    the slow accept subroutine (per-pass probability 1/(2^k (n+n'+1)^2)).

Coin flips are realized inside the model as a quarter-turn rotation of
the register followed by a basis measurement and an outcome-conditioned
restoring rotation, so all randomness is measurement-induced.  The
"reset the register" line of each outer loop is the identity: every
pass provably re-enters with the register on the start axis up to a
global sign, which no observation can see.

Classical state names are part of the public surface (traces and
machine files show them): scan1/rewind/scan2 drive the palindrome
passes, rot_scan the rotor scan, walk1/walk2L/walk2R the random walks.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .core import (
    LEFT_MARKER,
    RIGHT_MARKER,
    MachineSpec,
    Measurement,
    PlanarRotation,
    Unitary,
)
from .errors import QcfaError
from .states import PREC

__all__ = [
    "PalindromeParams",
    "AnbnParams",
    "QubitState",
    "build_palindrome_3state",
    "build_palindrome_single_qubit",
    "build_anbn",
    "phi_map",
    "u_hat",
    "U_A_ROWS",
    "U_B_ROWS",
    "HALF_ANGLE_COS",
    "HALF_ANGLE_SIN",
    "BUILDERS",
    "derived_k",
]


def _ceil_log2_inv(epsilon: float) -> int:
    """Smallest t >= 0 with 2^t >= 1/epsilon, decided exactly."""
    if not 0 < epsilon < 1:
        raise QcfaError(f"epsilon must be in (0, 1), got {epsilon}")
    frac = Fraction(epsilon)
    t, p = 0, Fraction(1)
    while p * frac < 1:
        p *= 2
        t += 1
    return t


@dataclass(frozen=True)
class PalindromeParams:
    """Error bound and derived coin count for the palindrome machines."""

    epsilon: float
    k: int

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise QcfaError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.k < max(5, _ceil_log2_inv(self.epsilon)):
            raise QcfaError(f"k={self.k} too small for epsilon={self.epsilon}")

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "PalindromeParams":
        return cls(epsilon, max(5, _ceil_log2_inv(epsilon)))


@dataclass(frozen=True)
class AnbnParams:
    """Error bound and derived coin count for the counting machine."""

    epsilon: float
    k: int

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise QcfaError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.k < 1:
            raise QcfaError("k must be at least 1")

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "AnbnParams":
        return cls(epsilon, 1 + _ceil_log2_inv(epsilon))


# ---------------------------------------------------------------------------
# The rational orthogonal symbol transforms (columns are basis images).
# ---------------------------------------------------------------------------

_F = Fraction
U_A_ROWS = (
    (_F(4, 5), _F(3, 5), _F(0)),
    (_F(-3, 5), _F(4, 5), _F(0)),
    (_F(0), _F(0), _F(1)),
)
U_B_ROWS = (
    (_F(4, 5), _F(0), _F(3, 5)),
    (_F(0), _F(1), _F(0)),
    (_F(-3, 5), _F(0), _F(4, 5)),
)


def _transpose(rows):
    return tuple(tuple(rows[j][i] for j in range(len(rows)))
                 for i in range(len(rows)))


# ---------------------------------------------------------------------------
# Palindrome machines
# ---------------------------------------------------------------------------


def _palindrome_tables(k: int):
    """Classical skeleton shared by the 3-state and single-qubit variants.

    States: scan1 sweeps right applying the symbol transform; rewind
    returns to the left marker; scan2 sweeps right applying the inverse
    transform and measures at the right marker; the coin stage walks
    left flipping k coins per square (short-circuiting the sweep once a
    group has failed, which leaves the accept event untouched).
    """
    L, R = LEFT_MARKER, RIGHT_MARKER
    syms = ("a", "b")
    theta: dict = {}
    delta: dict = {}

    def uni(state, sym, action, nxt, move):
        theta[(state, sym)] = action
        delta[(state, sym)] = (nxt, move)

    def meas(state, sym, action, heads, tails):
        theta[(state, sym)] = action
        delta[(state, sym)] = (heads, tails)

    uni("scan1", L, "noop", "scan1", 1)
    uni("scan1", "a", "u_a", "scan1", 1)
    uni("scan1", "b", "u_b", "scan1", 1)
    uni("scan1", R, "noop", "rewind", -1)

    for s in syms:
        uni("rewind", s, "noop", "rewind", -1)
    uni("rewind", L, "noop", "scan2", 1)

    uni("scan2", "a", "u_a_inv", "scan2", 1)
    uni("scan2", "b", "u_b_inv", "scan2", 1)
    meas("scan2", R, "read_out", ("land", 0), ("rej", 0))

    # Coin stage.  land begins a k-flip group on the scanned square;
    # flip r / meas r count down the flips remaining in the group.
    uni("land", L, "noop", "acc", 0)
    for sym in ("a", "b", R):
        uni("land", sym, "coin", f"meas{k}", 0)
        for r in range(1, k + 1):
            heads = ("land", -1) if r == 1 else (f"flip{r - 1}", 0)
            meas(f"meas{r}", sym, "read_out", heads, ("restore", 0))
        for r in range(1, k):
            uni(f"flip{r}", sym, "coin", f"meas{r}", 0)
        uni("restore", sym, "uncoin", "walkb1", -1)
    for s in syms:
        uni("walkb1", s, "noop", "walkb1", -1)
    uni("walkb1", L, "noop", "scan1", 0)

    states = (
        ["scan1", "rewind", "scan2", "land"]
        + [f"meas{r}" for r in range(1, k + 1)]
        + [f"flip{r}" for r in range(1, k)]
        + ["restore", "walkb1", "acc", "rej"]
    )
    _fill_unreachable(theta, delta, states, ("acc", "rej"), syms)
    return tuple(states), theta, delta


def _fill_unreachable(theta, delta, states, halting, syms):
    """Make theta/delta total; unreachable pairs route to rejection.

    A builder bug that makes one of these pairs reachable then shows up
    as a spurious rejection, which the certainty tests catch.
    """
    alphabet = tuple(syms) + (LEFT_MARKER, RIGHT_MARKER)
    for s in states:
        if s in halting:
            continue
        for g in alphabet:
            if (s, g) not in theta:
                theta[(s, g)] = "noop"
                delta[(s, g)] = ("rej", 0)


def build_palindrome_3state(params: PalindromeParams) -> MachineSpec:
    """Three-orthogonal-state palindrome recognizer."""
    states, theta, delta = _palindrome_tables(params.k)
    actions = {
        "u_a": Unitary(U_A_ROWS),
        "u_b": Unitary(U_B_ROWS),
        "u_a_inv": Unitary(_transpose(U_A_ROWS)),
        "u_b_inv": Unitary(_transpose(U_B_ROWS)),
        "noop": PlanarRotation((0, 1), 0, 0),
        "coin": PlanarRotation((0, 1), 0, 1),
        "uncoin": PlanarRotation((0, 1), 0, -2),
        "read_out": Measurement(groups=((0,), (1, 2))),
    }
    return MachineSpec(
        name="palindrome3",
        quantum_states=("q0", "q1", "q2"),
        classical_states=states,
        input_alphabet=("a", "b"),
        initial_quantum="q0",
        initial_classical="scan1",
        accepting=frozenset({"acc"}),
        rejecting=frozenset({"rej"}),
        actions=actions,
        theta=theta,
        delta=delta,
        backend="exact",
        pass_marker="scan1",
    )


# Half-angle of the qubit rotations: the sphere transforms above rotate
# by the angle with cosine 4/5 and sine 3/5, i.e. arctan(3/4); its
# half-angle has cos = 3/sqrt(10) and sin = 1/sqrt(10).
HALF_ANGLE_COS = 3 / math.sqrt(10)
HALF_ANGLE_SIN = 1 / math.sqrt(10)


def u_hat(symbol: str):
    """Single-qubit replacements for the two symbol transforms.

    The a-transform is a rotation about the Bloch x-axis, the
    b-transform about the y-axis, both by arctan(3/4); applying either
    commutes with ``phi_map`` up to a global phase.
    """
    c, s = HALF_ANGLE_COS, HALF_ANGLE_SIN
    if symbol == "a":
        return ((complex(c), -1j * s), (-1j * s, complex(c)))
    if symbol == "b":
        return ((complex(c), complex(s)), (complex(-s), complex(c)))
    raise QcfaError(f"unknown symbol {symbol!r}")


@dataclass(frozen=True)
class QubitState:
    """Two complex amplitudes with unit norm (to 1e-9)."""

    alpha0: complex
    alpha1: complex

    def __post_init__(self):
        n = abs(self.alpha0) ** 2 + abs(self.alpha1) ** 2
        if abs(n - 1.0) > 1e-9:
            raise QcfaError(f"qubit norm {n} deviates from 1")

    def inner(self, other: "QubitState") -> complex:
        return (self.alpha0.conjugate() * other.alpha0
                + self.alpha1.conjugate() * other.alpha1)

    def prob_one(self) -> float:
        return abs(self.alpha1) ** 2


def phi_map(v) -> QubitState:
    """Map a real unit 3-vector onto the qubit sphere.

    With v = (cos p, sin p sin q, sin p cos q) the image is
    e^{-iq/2} cos(p/2) |0> + e^{iq/2} sin(p/2) |1>.  The first
    coordinate of v carries the survival amplitude of the three-state
    machine, so measuring the image in the computational basis sees any
    weight v lost off the first axis, at least a quarter of it.
    """
    v0, v1, v2 = (float(x) for x in v)
    norm = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
    if abs(norm - 1.0) > 1e-9:
        raise QcfaError(f"phi_map needs a unit vector, norm was {norm}")
    p = math.acos(min(1.0, max(-1.0, v0)))
    q = math.atan2(v1, v2) if (v1 != 0.0 or v2 != 0.0) else 0.0
    a0 = cmath.exp(-0.5j * q) * math.cos(p / 2)
    a1 = cmath.exp(0.5j * q) * math.sin(p / 2)
    return QubitState(a0, a1)


def _u_hat_mp(symbol: str):
    """u_hat at the floating backend's working precision."""
    with mp.workprec(PREC):
        c = mp.sqrt(mp.mpf(9) / 10)
        s = mp.sqrt(mp.mpf(1) / 10)
        i = mp.mpc(0, 1)
        if symbol == "a":
            return ((mp.mpc(c), -i * s), (-i * s, mp.mpc(c)))
        return ((mp.mpc(c), mp.mpc(s)), (mp.mpc(-s), mp.mpc(c)))


def _dagger(rows):
    n = len(rows)
    return tuple(tuple(rows[j][i].conjugate() for j in range(n))
                 for i in range(n))


def build_palindrome_single_qubit(params: PalindromeParams) -> MachineSpec:
    """Palindrome recognizer with a single-qubit register.

    Off-axis weight d is detected with probability only (1-sqrt(1-d))/2
    >= d/4 per pass, so the coin count is params.k + 2: the extra two
    flips shrink the per-pass accept probability by the factor 4 that
    the weaker detector costs.
    """
    k = params.k + 2
    states, theta, delta = _palindrome_tables(k)
    actions = {
        "u_a": Unitary(_u_hat_mp("a")),
        "u_b": Unitary(_u_hat_mp("b")),
        "u_a_inv": Unitary(_dagger(_u_hat_mp("a"))),
        "u_b_inv": Unitary(_dagger(_u_hat_mp("b"))),
        "noop": PlanarRotation((0, 1), 0, 0),
        "coin": PlanarRotation((0, 1), 0, 1),
        "uncoin": PlanarRotation((0, 1), 0, -2),
        "read_out": Measurement(groups=((0,), (1,))),
    }
    return MachineSpec(
        name="palindrome-qubit",
        quantum_states=("q0", "q1"),
        classical_states=states,
        input_alphabet=("a", "b"),
        initial_quantum="q0",
        initial_classical="scan1",
        accepting=frozenset({"acc"}),
        rejecting=frozenset({"rej"}),
        actions=actions,
        theta=theta,
        delta=delta,
        backend="float",
        pass_marker="scan1",
    )


# ---------------------------------------------------------------------------
# The a^n b^n machine
# ---------------------------------------------------------------------------


def build_anbn(params: AnbnParams) -> MachineSpec:
    """Counting recognizer for a^n b^n; rotor backend.

    Shape of one pass: scan right rotating the rotor +/- sqrt(2)*pi per
    symbol and measure at the right marker (any mismatch leaves an
    irrational angle, giving a rejection probability of at least
    1/(2(n-n')^2)); then run two fair random walks from the first input
    square, absorbed at the markers, and on a double right-marker hit
    flip k coins, accepting on all heads (per-pass probability exactly
    1/(2^k (n+n'+1)^2)).

    The outer loop repeats indefinitely, so no repetition count needs
    fixing at runtime; a member input is eventually accepted with
    probability 1 because every pass accepts with the same positive
    probability.
    """
    k = params.k
    L, R = LEFT_MARKER, RIGHT_MARKER
    syms = ("a", "b")
    theta: dict = {}
    delta: dict = {}

    def uni(state, sym, action, nxt, move):
        theta[(state, sym)] = action
        delta[(state, sym)] = (nxt, move)

    def meas(state, sym, heads, tails):
        theta[(state, sym)] = "read_out"
        delta[(state, sym)] = (heads, tails)

    # Classical shape check a*b*.
    uni("pre_a", L, "noop", "pre_a", 1)
    uni("pre_a", "a", "noop", "pre_a", 1)
    uni("pre_a", "b", "noop", "pre_b", 1)
    uni("pre_a", R, "noop", "rew0", -1)
    uni("pre_b", "b", "noop", "pre_b", 1)
    uni("pre_b", "a", "noop", "rej", 0)
    uni("pre_b", R, "noop", "rew0", -1)

    # Rewind to the left marker, then enter the pass-start configuration.
    for s in syms:
        uni("rew0", s, "noop", "rew0", -1)
    uni("rew0", L, "noop", "rot_scan", 0)

    # Loop: rotate per symbol, measure at the right marker.
    uni("rot_scan", L, "noop", "rot_scan", 1)
    uni("rot_scan", "a", "spin_up", "rot_scan", 1)
    uni("rot_scan", "b", "spin_down", "rot_scan", 1)
    meas("rot_scan", R, ("rew_walk", -1), ("rej", 0))

    for s in syms:
        uni("rew_walk", s, "noop", "rew_walk", -1)
    uni("rew_walk", L, "noop", "walk1", 1)

    # First random walk, from tape square 1, absorbed at either marker.
    def walk(name, on_left, on_right):
        for s in syms:
            uni(name, s, "coin", f"{name}_m", 0)
            meas(f"{name}_m", s, (name, 1), (f"{name}_r", 0))
            uni(f"{name}_r", s, "uncoin", name, -1)
        uni(name, L, "noop", *on_left)
        uni(name, R, "noop", *on_right)

    walk("walk1", on_left=("walk2L", 1), on_right=("rew2", -1))
    for s in syms:
        uni("rew2", s, "noop", "rew2", -1)
    uni("rew2", L, "noop", "walk2R", 1)

    # Second walk; the classical state remembers where the first ended.
    walk("walk2L", on_left=("rot_scan", 0), on_right=("rew0", -1))
    walk("walk2R", on_left=("rot_scan", 0), on_right=(f"kcoin{k}", 0))

    # Both walks hit the right marker: flip k coins at the right marker.
    for r in range(1, k + 1):
        uni(f"kcoin{r}", R, "coin", f"kmeas{r}", 0)
        heads = ("acc", 0) if r == 1 else (f"kcoin{r - 1}", 0)
        meas(f"kmeas{r}", R, heads, ("krestore", 0))
    uni("krestore", R, "uncoin", "rew0", -1)

    states = (
        ["pre_a", "pre_b", "rew0", "rot_scan", "rew_walk"]
        + ["walk1", "walk1_m", "walk1_r", "rew2"]
        + ["walk2L", "walk2L_m", "walk2L_r"]
        + ["walk2R", "walk2R_m", "walk2R_r"]
        + [f"kcoin{r}" for r in range(1, k + 1)]
        + [f"kmeas{r}" for r in range(1, k + 1)]
        + ["krestore", "acc", "rej"]
    )
    _fill_unreachable(theta, delta, states, ("acc", "rej"), syms)

    actions = {
        "noop": PlanarRotation((0, 1), 0, 0),
        "spin_up": PlanarRotation((0, 1), 1, 0),
        "spin_down": PlanarRotation((0, 1), -1, 0),
        "coin": PlanarRotation((0, 1), 0, 1),
        "uncoin": PlanarRotation((0, 1), 0, -2),
        "read_out": Measurement(groups=((0,), (1,))),
    }
    return MachineSpec(
        name="anbn",
        quantum_states=("q0", "q1"),
        classical_states=tuple(states),
        input_alphabet=("a", "b"),
        initial_quantum="q0",
        initial_classical="pre_a",
        accepting=frozenset({"acc"}),
        rejecting=frozenset({"rej"}),
        actions=actions,
        theta=theta,
        delta=delta,
        backend="rotor",
        pass_marker="rot_scan",
    )


def _build_pal3(epsilon: float) -> MachineSpec:
    return build_palindrome_3state(PalindromeParams.from_epsilon(epsilon))


def _build_qubit(epsilon: float) -> MachineSpec:
    return build_palindrome_single_qubit(PalindromeParams.from_epsilon(epsilon))


def _build_anbn(epsilon: float) -> MachineSpec:
    return build_anbn(AnbnParams.from_epsilon(epsilon))


BUILDERS = {
    "palindrome3": _build_pal3,
    "palindrome-qubit": _build_qubit,
    "anbn": _build_anbn,
}


def derived_k(machine: str, epsilon: float) -> int:
    """The coin count a named builder bakes into its machine."""
    if machine == "palindrome3":
        return PalindromeParams.from_epsilon(epsilon).k
    if machine == "palindrome-qubit":
        return PalindromeParams.from_epsilon(epsilon).k + 2
    if machine == "anbn":
        return AnbnParams.from_epsilon(epsilon).k
    raise QcfaError(f"unknown machine {machine!r}")
