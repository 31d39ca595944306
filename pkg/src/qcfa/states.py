"""Quantum register state backends and exact outcome sampling.

Three interchangeable state representations back the simulator:

``ExactState``
    Amplitude vector over the scalar field Q(sqrt 2).  The palindrome
    machine's transform amplitudes are plain rationals with power-of-5
    denominators; the sqrt(2) part appears only transiently inside the
    quarter-turn coin rotations, so measurement weights stay rational
    and every probability is exact.

``RotorState``
    A single planar rotor tracked as the exact pair (j, m) of rotation
    units: the angle is pi * (j*sqrt(2) + m/4).  Used by the counting
    machine, where the spread angle after a scan is an exact integer
    multiple of sqrt(2)*pi.  Trig is evaluated lazily, only at
    measurements, with at least 128 fractional bits.

``FloatState``
    Complex amplitudes as mpmath numbers at 128-bit working precision
    (well above the 64 significant fraction bits the model requires).

Measurement sampling is shared by every backend and by both execution
engines: outcome weights are reduced to exact cut points on the uniform
2^64 grid (the grid the random source draws from), so a zero-probability
outcome is never sampled and equal seeds give identical runs everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import mpmath
from mpmath import mp

from .errors import ExactnessError

__all__ = [
    "PREC",
    "GRID",
    "Sqrt2Rational",
    "ExactState",
    "RotorState",
    "FloatState",
    "OutcomeSampler",
    "build_sampler",
    "exact_fraction",
    "rotor_sin_sq",
]

# Working precision (bits) for the floating backend and lazy rotor trig.
PREC = 128

# Resolution of the uniform sampling grid: one draw is u / 2^64.
GRID_BITS = 64
GRID = 1 << GRID_BITS

# Rotor arguments beyond this lose too many bits even at high precision.
MAX_ROTOR_UNITS = 1 << 40

_ZERO = Fraction(0)
_ONE = Fraction(1)
_HALF = Fraction(1, 2)


def _frac_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


class Sqrt2Rational:
    """Element a + b*sqrt(2) of the real quadratic field Q(sqrt 2).

    Arithmetic, ordering and (partial) square roots are exact; ordering
    decides the sign of a + b*sqrt(2) via integer comparisons only.
    """

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        if type(a) is not Fraction:
            a = _ZERO if a == 0 else Fraction(a)
        if type(b) is not Fraction:
            b = _ZERO if b == 0 else Fraction(b)
        self.a = a
        self.b = b

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return 1 if b > 0 else -1
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # Opposite signs: |a| vs |b|*sqrt(2) through squares (never equal).
        bigger_rational = a * a > 2 * b * b
        if a > 0:
            return 1 if bigger_rational else -1
        return -1 if bigger_rational else 1

    # -- arithmetic ---------------------------------------------------

    @staticmethod
    def _coerce(x):
        if type(x) is Sqrt2Rational:
            return x
        if isinstance(x, (int, Fraction)):
            return Sqrt2Rational(x, 0)
        return None

    def __add__(self, other):
        if type(other) is Sqrt2Rational:
            return Sqrt2Rational(self.a + other.a, self.b + other.b)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Sqrt2Rational(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Sqrt2Rational(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Sqrt2Rational(o.a - self.a, o.b - self.b)

    def __neg__(self):
        return Sqrt2Rational(-self.a, -self.b)

    def __mul__(self, other):
        if type(other) is Sqrt2Rational:
            # rational-only operands dominate; skip the cross terms
            if self.b == 0 and other.b == 0:
                return Sqrt2Rational(self.a * other.a, 0)
            return Sqrt2Rational(
                self.a * other.a + 2 * self.b * other.b,
                self.a * other.b + self.b * other.a,
            )
        if isinstance(other, (int, Fraction)):
            return Sqrt2Rational(self.a * other, self.b * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.a * o.a - 2 * o.b * o.b
        if den == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt 2)")
        # 1/(a + b sqrt2) = (a - b sqrt2) / (a^2 - 2 b^2)
        return Sqrt2Rational(
            (self.a * o.a - 2 * self.b * o.b) / den,
            (self.b * o.a - self.a * o.b) / den,
        )

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * 1.4142135623730951

    def to_mpf(self):
        return (
            mp.mpf(self.a.numerator) / self.a.denominator
            + mp.sqrt(mp.mpf(2)) * self.b.numerator / self.b.denominator
        )

    def rational(self) -> Fraction:
        if self.b != 0:
            raise ExactnessError(f"{self!r} is not rational")
        return self.a

    def sqrt(self) -> "Sqrt2Rational":
        """Exact square root inside the field; ExactnessError if absent."""
        s = self.sign()
        if s < 0:
            raise ValueError("square root of a negative field element")
        if s == 0:
            return Sqrt2Rational(0, 0)
        if self.b == 0:
            r = _frac_sqrt(self.a)
            if r is not None:
                return Sqrt2Rational(r, 0)
            r = _frac_sqrt(self.a / 2)
            if r is not None:
                return Sqrt2Rational(0, r)
            raise ExactnessError(f"sqrt({self!r}) is not in Q(sqrt 2)")
        disc = _frac_sqrt(self.a * self.a - 2 * self.b * self.b)
        if disc is not None:
            for y_sq in ((self.a + disc) / 4, (self.a - disc) / 4):
                if y_sq <= 0:
                    continue
                y = _frac_sqrt(y_sq)
                if y is None:
                    continue
                cand = Sqrt2Rational(self.b / (2 * y), y)
                if cand.sign() < 0:
                    cand = -cand
                if cand * cand == self:
                    return cand
        raise ExactnessError(f"sqrt({self!r}) is not in Q(sqrt 2)")

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        return f"({self.a} + {self.b}*sqrt2)"


_S2_ZERO = Sqrt2Rational(0)
_S2_ONE = Sqrt2Rational(1)
_S2_HALF_ROOT = Sqrt2Rational(0, _HALF)  # sqrt(2)/2

# cos/sin of m * pi/4 for m mod 8; everything lands inside the field.
_COS_QUARTER = (
    _S2_ONE, _S2_HALF_ROOT, _S2_ZERO, -_S2_HALF_ROOT,
    -_S2_ONE, -_S2_HALF_ROOT, _S2_ZERO, _S2_HALF_ROOT,
)
_SIN_QUARTER = (
    _S2_ZERO, _S2_HALF_ROOT, _S2_ONE, _S2_HALF_ROOT,
    _S2_ZERO, -_S2_HALF_ROOT, -_S2_ONE, -_S2_HALF_ROOT,
)

_SIN_SQ_QUARTER = (_ZERO, _HALF, _ONE, _HALF, _ZERO, _HALF, _ONE, _HALF)


def rotor_sin_sq(j: int, m: int):
    """sin^2(pi * (j*sqrt2 + m/4)); exact Fraction when j == 0.

    For j != 0 the value is irrational; it is evaluated as an mpf with
    128 fractional bits plus enough headroom to absorb the size of j.
    """
    if j == 0:
        return _SIN_SQ_QUARTER[m % 8]
    if abs(j) > MAX_ROTOR_UNITS:
        raise ExactnessError(f"rotor count {j} exceeds precision budget")
    with mp.workprec(PREC + abs(j).bit_length() + 16):
        s = mp.sinpi(j * mp.sqrt(2) + mp.mpf(m) / 4)
        return s * s


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of a finite mpf (mpfs are dyadic)."""
    sign, man, exp, _ = x._mpf_
    if man == 0:
        if exp != 0:
            raise ValueError(f"non-finite value {x}")
        return _ZERO
    v = Fraction(man) * Fraction(2) ** exp
    return -v if sign else v


def exact_fraction(w) -> Fraction:
    if type(w) is Fraction:
        return w
    if isinstance(w, int):
        return Fraction(w)
    if isinstance(w, mpmath.mpf):
        return mpf_to_fraction(w)
    if type(w) is Sqrt2Rational:
        return w.rational()
    raise TypeError(f"cannot take {type(w).__name__} as an exact weight")


@dataclass(frozen=True)
class OutcomeSampler:
    """Measurement outcome chooser on the uniform 2^64 draw grid.

    ``thresholds`` are the strictly increasing exact cut points
    floor(cumulative * 2^64) of the outcomes that have positive weight
    on the grid; the final outcome needs no stored threshold.  Outcomes
    with zero weight can never be produced, which keeps one-sided-error
    claims exact under Monte Carlo.
    """

    thresholds: tuple[int, ...]
    outcomes: tuple[int, ...]

    def sample(self, u: int) -> int:
        for i, t in enumerate(self.thresholds):
            if u < t:
                return self.outcomes[i]
        return self.outcomes[-1]


# Floating projector weights can round a hair below zero.
_NEG_WEIGHT_TOL = Fraction(1, 1 << 100)


def build_sampler(weights) -> OutcomeSampler:
    """Reduce outcome weights (Fractions or mpfs) to grid cut points."""
    fr = [exact_fraction(w) for w in weights]
    total = sum(fr)
    if total <= 0:
        raise ExactnessError("measurement weights sum to zero")
    cum = _ZERO
    outs: list[int] = []
    cuts: list[int] = []
    prev = 0
    for idx, w in enumerate(fr):
        if w <= 0:
            if w < -_NEG_WEIGHT_TOL:
                raise ExactnessError(f"negative measurement weight {w}")
            continue
        cum += w
        scaled = cum / total
        t = (scaled.numerator << GRID_BITS) // scaled.denominator
        if t == prev:
            continue  # below grid resolution
        outs.append(idx)
        cuts.append(t)
        prev = t
    return OutcomeSampler(tuple(cuts[:-1]), tuple(outs))


# ---------------------------------------------------------------------------
# State backends
# ---------------------------------------------------------------------------


class ExactState:
    """Real amplitude vector over Q(sqrt 2) with unit norm."""

    __slots__ = ("amps",)

    def __init__(self, amps):
        self.amps = tuple(
            a if type(a) is Sqrt2Rational else Sqrt2Rational(a) for a in amps
        )

    @staticmethod
    def basis(dim: int, index: int) -> "ExactState":
        return ExactState(
            tuple(_S2_ONE if i == index else _S2_ZERO for i in range(dim))
        )

    @property
    def dim(self) -> int:
        return len(self.amps)

    def norm_sq(self) -> Sqrt2Rational:
        total = _S2_ZERO
        for a in self.amps:
            total = total + a * a
        return total

    def apply_matrix(self, rows) -> "ExactState":
        amps = self.amps
        new = []
        for row in rows:
            acc = _S2_ZERO
            for j, e in enumerate(row):
                a = amps[j]
                if e == 0 or (a.a == 0 and a.b == 0):
                    continue
                acc = acc + a * e
            new.append(acc)
        return ExactState(new)

    def apply_rotation(self, i: int, j: int, sqrt2_units: int,
                       quarter_units: int) -> "ExactState":
        if sqrt2_units != 0:
            raise ExactnessError(
                "sqrt2-pi rotations are not representable on the exact "
                "vector backend; use the rotor or float backend"
            )
        c = _COS_QUARTER[quarter_units % 8]
        s = _SIN_QUARTER[quarter_units % 8]
        amps = list(self.amps)
        ai, aj = amps[i], amps[j]
        amps[i] = c * ai - s * aj
        amps[j] = s * ai + c * aj
        return ExactState(amps)

    def measure_group_weights(self, groups) -> list[Fraction]:
        out = []
        for g in groups:
            w = _S2_ZERO
            for i in g:
                w = w + self.amps[i] * self.amps[i]
            out.append(w.rational())
        return out

    def collapse(self, group) -> "ExactState":
        keep = set(group)
        proj = [a if i in keep else _S2_ZERO for i, a in enumerate(self.amps)]
        nsq = _S2_ZERO
        for a in proj:
            nsq = nsq + a * a
        norm = nsq.sqrt()
        return ExactState(tuple(a / norm for a in proj))

    def measure_projector_weights(self, projectors) -> list[Fraction]:
        out = []
        for p in projectors:
            img = self.apply_matrix(p).amps
            w = _S2_ZERO
            for a, pa in zip(self.amps, img):
                w = w + a * pa
            out.append(w.rational())
        return out

    def collapse_projector(self, projector) -> "ExactState":
        img = self.apply_matrix(projector)
        norm = img.norm_sq().sqrt()
        return ExactState(tuple(a / norm for a in img.amps))

    def key(self):
        """Canonical hashable key; the overall sign is a global phase."""
        amps = self.amps
        for a in amps:
            s = a.sign()
            if s < 0:
                amps = tuple(-x for x in amps)
            if s != 0:
                break
        return tuple((x.a.numerator, x.a.denominator,
                      x.b.numerator, x.b.denominator) for x in amps)

    def __eq__(self, other):
        return isinstance(other, ExactState) and self.amps == other.amps

    def __hash__(self):
        return hash(self.amps)

    def __repr__(self):
        return f"ExactState({', '.join(map(repr, self.amps))})"


class RotorState:
    """Planar rotor over two basis states, angle pi*(j*sqrt2 + m/4).

    The amplitude vector is (cos angle, sin angle); j and m are exact
    integers, so the "rotations cancel" case is the exact j == 0, m == 0
    and never a floating comparison.
    """

    __slots__ = ("j", "m")

    def __init__(self, j: int, m: int):
        self.j = j
        self.m = m % 8

    @staticmethod
    def basis(dim: int, index: int) -> "RotorState":
        if dim != 2 or index not in (0, 1):
            raise ExactnessError("rotor backend is two-dimensional")
        return RotorState(0, 0 if index == 0 else 2)

    @property
    def dim(self) -> int:
        return 2

    def norm_sq(self):
        return _ONE

    def apply_matrix(self, rows):
        raise ExactnessError(
            "rotor backend supports planar rotations only; "
            "use the exact or float backend for general unitaries"
        )

    def apply_rotation(self, i: int, j: int, sqrt2_units: int,
                       quarter_units: int) -> "RotorState":
        if (i, j) != (0, 1):
            raise ExactnessError("rotor rotations act on the (0, 1) plane")
        return RotorState(self.j + sqrt2_units, self.m + quarter_units)

    def _weights01(self):
        p1 = rotor_sin_sq(self.j, self.m)
        return (1 - p1, p1)

    def measure_group_weights(self, groups):
        w0, w1 = self._weights01()
        out = []
        for g in groups:
            total = 0
            if 0 in g:
                total = total + w0
            if 1 in g:
                total = total + w1
            out.append(total)
        return out

    def collapse(self, group) -> "RotorState":
        g = tuple(sorted(set(group)))
        if g == (0, 1):
            return self
        if g == (0,):
            return RotorState(0, 0)
        if g == (1,):
            return RotorState(0, 2)
        raise ExactnessError(f"bad rotor measurement group {group}")

    def measure_projector_weights(self, projectors):
        raise ExactnessError("rotor backend measures basis partitions only")

    def key(self):
        return (self.j, self.m)

    def __eq__(self, other):
        return (
            isinstance(other, RotorState)
            and self.j == other.j
            and self.m == other.m
        )

    def __hash__(self):
        return hash((self.j, self.m))

    def __repr__(self):
        return f"RotorState(j={self.j}, m={self.m})"


def to_mpc(x):
    """Any supported scalar type as an mpc at the ambient precision."""
    if isinstance(x, mpmath.mpc):
        return x
    if isinstance(x, mpmath.mpf):
        return mp.mpc(x)
    if isinstance(x, Fraction):
        return mp.mpc(mp.mpf(x.numerator) / x.denominator)
    if type(x) is Sqrt2Rational:
        return mp.mpc(x.to_mpf())
    return mp.mpc(x)


_to_mpc = to_mpc


class FloatState:
    """Complex amplitude vector at 128-bit working precision."""

    __slots__ = ("amps",)

    def __init__(self, amps):
        with mp.workprec(PREC):
            self.amps = tuple(_to_mpc(a) for a in amps)

    @staticmethod
    def basis(dim: int, index: int) -> "FloatState":
        return FloatState(tuple(1 if i == index else 0 for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.amps)

    def norm_sq(self):
        with mp.workprec(PREC):
            return mp.fsum(a.real * a.real + a.imag * a.imag
                           for a in self.amps)

    def apply_matrix(self, rows) -> "FloatState":
        with mp.workprec(PREC):
            new = []
            for row in rows:
                acc = mp.mpc(0)
                for j in range(self.dim):
                    acc += _to_mpc(row[j]) * self.amps[j]
                new.append(acc)
        return FloatState(new)

    def apply_rotation(self, i: int, j: int, sqrt2_units: int,
                       quarter_units: int) -> "FloatState":
        with mp.workprec(PREC + abs(sqrt2_units).bit_length() + 16):
            arg = sqrt2_units * mp.sqrt(2) + mp.mpf(quarter_units) / 4
            c, s = mp.cospi(arg), mp.sinpi(arg)
            amps = list(self.amps)
            ai, aj = amps[i], amps[j]
            amps[i] = c * ai - s * aj
            amps[j] = s * ai + c * aj
        return FloatState(amps)

    def measure_group_weights(self, groups):
        with mp.workprec(PREC):
            return [
                mp.fsum(
                    self.amps[i].real ** 2 + self.amps[i].imag ** 2
                    for i in g
                )
                for g in groups
            ]

    def collapse(self, group) -> "FloatState":
        keep = set(group)
        with mp.workprec(PREC):
            proj = [a if i in keep else mp.mpc(0)
                    for i, a in enumerate(self.amps)]
            norm = mp.sqrt(mp.fsum(a.real ** 2 + a.imag ** 2 for a in proj))
            return FloatState(tuple(a / norm for a in proj))

    def measure_projector_weights(self, projectors):
        with mp.workprec(PREC):
            out = []
            for p in projectors:
                img = self.apply_matrix(p).amps
                out.append(
                    mp.fsum((mp.conj(a) * b).real
                            for a, b in zip(self.amps, img))
                )
            return out

    def collapse_projector(self, projector) -> "FloatState":
        img = self.apply_matrix(projector)
        with mp.workprec(PREC):
            norm = mp.sqrt(img.norm_sq())
            return FloatState(tuple(a / norm for a in img.amps))

    def key(self):
        return None  # not exactly hashable; float machines are not compiled

    def __eq__(self, other):
        return isinstance(other, FloatState) and self.amps == other.amps

    def __hash__(self):
        return hash(self.amps)

    def __repr__(self):
        return f"FloatState({', '.join(mp.nstr(a, 8) for a in self.amps)})"
