"""Closed-form probabilities and mechanical checks of the key bounds.

Everything here is exact (Fractions) or evaluated to at least 128
fractional bits (mpmath), never hardware floats:

* the mod-5 closure of the invariant set K under both transforms,
  checked over all 125 residue triples;
* the separation bound: distinct transform words of length n leave
  residual weight strictly above 25^-n, checked by brute force over all
  word pairs;
* per-pass and aggregate halting probabilities of both machines;
* the rotation gap sin^2(sqrt2 d pi) >= 1/(2 d^2);
* the absorbed-walk hitting law 1/N, cross-checked against an exact
  tridiagonal solve;
* a log-log slope fit for empirical running-time growth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from mpmath import mp

from .errors import FitError, NonHaltingError, QcfaError, ResourceError
from .exact_linalg import (
    MAT_A,
    MAT_A_INV,
    MAT_B,
    MAT_B_INV,
    UNIT_E1,
    exact_apply,
    in_K,
    residual_norm_sq,
)
from .states import MAX_ROTOR_UNITS, PREC, mpf_to_fraction

__all__ = [
    "PassProbabilities",
    "HaltingDistribution",
    "SeparationReport",
    "verify_k_closure",
    "verify_separation",
    "palindrome_pass_probs",
    "aggregate_halting",
    "anbn_pass_probs",
    "rotation_gap",
    "gap_bound_holds",
    "walk_hit_probability",
    "absorbing_hit_probability",
    "both_preimage_classes",
    "fit_runtime_exponent",
]


@dataclass(frozen=True)
class PassProbabilities:
    """Per-iteration halting probabilities of one outer-loop pass.

    ``p_rej`` is an exact Fraction for the palindrome machine and a
    high-precision mpf for the rotor machine; ``p_acc`` is always an
    exact Fraction.
    """

    p_rej: object
    p_acc: Fraction


@dataclass(frozen=True)
class HaltingDistribution:
    accept_probability: object
    reject_probability: object
    expected_iterations: object


def verify_k_closure(matrices=None) -> bool:
    """Exhaustive mod-5 check that K maps into K under both transforms.

    Valid because membership in K depends only on residues mod 5 and
    both matrices have integer entries, so the 125 residue triples
    cover every integer vector.  ``matrices`` overrides the transform
    pair; it exists as a negative-control hook for the verifier CLI.
    """
    for u in product(range(5), repeat=3):
        if not in_K(u):
            continue
        for m in (matrices or (MAT_A, MAT_B)):
            if not in_K(m.mul_vec_mod(u, 5)):
                return False
    return True


@dataclass(frozen=True)
class SeparationReport:
    n_max: int
    pairs_checked: int
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_separation(n_max: int) -> SeparationReport:
    """Brute-force the word separation bound for all lengths up to n_max.

    For every pair of words X, Y over the two transforms, the vector
    Y1^-1 ... Yn^-1 Xn ... X1 e1 has residual weight exactly zero when
    X == Y and strictly above 25^-n otherwise; both sides are compared
    as exact rationals.
    """
    if n_max > 8:
        raise ResourceError("n_max beyond 8 means more than 4^8 word pairs")
    fwd = {"A": MAT_A, "B": MAT_B}
    inv = {"A": MAT_A_INV, "B": MAT_B_INV}
    violations: list[str] = []
    pairs = 0
    for n in range(1, n_max + 1):
        bound = Fraction(1, 25**n)
        for xs in product("AB", repeat=n):
            v = UNIT_E1
            for x in xs:
                v = exact_apply(fwd[x], v)
            for ys in product("AB", repeat=n):
                u = v
                # Y1^-1 is applied last: walk the word back to front.
                for y in reversed(ys):
                    u = exact_apply(inv[y], u)
                residual = residual_norm_sq(u)
                pairs += 1
                if xs == ys:
                    if residual != 0:
                        violations.append(
                            f"X=Y={''.join(xs)}: residual {residual} != 0")
                elif residual <= bound:
                    violations.append(
                        f"X={''.join(xs)} Y={''.join(ys)}: "
                        f"residual {residual} <= 25^-{n}")
    return SeparationReport(n_max, pairs, tuple(violations))


def palindrome_pass_probs(x: str, k: int) -> PassProbabilities:
    """Exact per-pass probabilities of the palindrome machine on x.

    The rejection weight comes from the exact transform chain applied
    in machine order (forward word, then inverses front to back); the
    acceptance probability is 2^-(k(n+1)) from the coin stage.
    """
    if any(c not in "ab" for c in x):
        raise QcfaError(f"input {x!r} is not over {{a, b}}")
    fwd = {"a": MAT_A, "b": MAT_B}
    inv = {"a": MAT_A_INV, "b": MAT_B_INV}
    v = UNIT_E1
    for c in x:
        v = exact_apply(fwd[c], v)
    for c in x:
        v = exact_apply(inv[c], v)
    n = len(x)
    return PassProbabilities(
        p_rej=residual_norm_sq(v),
        p_acc=Fraction(1, 2 ** (k * (n + 1))),
    )


def aggregate_halting(p: PassProbabilities) -> HaltingDistribution:
    """Sum the geometric series over identically distributed passes.

    reject = p_rej / (p_acc + p_rej - p_acc p_rej) and the accept share
    is the complement; with exact inputs the two sum to exactly 1.  A
    high-precision p_rej (rotor machine) is folded in exactly: mpfs are
    dyadic rationals, so the aggregate stays a Fraction.
    """
    p_rej, p_acc = p.p_rej, p.p_acc
    if not isinstance(p_rej, (Fraction, int)):
        p_rej = mpf_to_fraction(p_rej)
    denom = p_acc + p_rej - p_acc * p_rej
    if denom == 0:
        raise NonHaltingError("both per-pass halting probabilities are zero")
    reject = p_rej / denom
    accept = (p_acc - p_acc * p_rej) / denom
    return HaltingDistribution(accept, reject, 1 / denom)


def rotation_gap(d: int):
    """sin^2(sqrt2 d pi) at high precision; provably >= 1/(2 d^2).

    sqrt2 is carried with 128 fractional bits plus headroom for the
    size of d; |d| is capped so at least 80 correct bits survive the
    argument reduction.
    """
    if d == 0:
        raise QcfaError("the rotation gap is 0 at d = 0; nothing to bound")
    if abs(d) > MAX_ROTOR_UNITS:
        raise ResourceError(f"|d| capped at 2^40, got {d}")
    with mp.workprec(PREC + abs(d).bit_length() + 16):
        s = mp.sinpi(d * mp.sqrt(2))
        return s * s


def gap_bound_holds(d: int) -> bool:
    """Exact check of sin^2(sqrt2 d pi) >= 1/(2 d^2).

    The high-precision value is a dyadic rational, so the comparison
    against the exact bound is itself exact; the true margin of the
    bound dwarfs the 2^-128 evaluation error.
    """
    return mpf_to_fraction(rotation_gap(d)) >= Fraction(1, 2 * d * d)


def anbn_pass_probs(n: int, n_prime: int, k: int) -> PassProbabilities:
    """Per-pass probabilities of the counting machine on a^n b^n'.

    Rejection is the rotor gap sin^2(sqrt2 (n-n') pi), exactly zero at
    n == n'; acceptance is 1/(2^k (n+n'+1)^2): both walks must reach
    the right marker (1/(n+n'+1) each) and all k coins must land heads.
    """
    if n < 0 or n_prime < 0:
        raise QcfaError("counts must be nonnegative")
    d = n - n_prime
    p_rej = Fraction(0) if d == 0 else rotation_gap(d)
    p_acc = Fraction(1, (2**k) * (n + n_prime + 1) ** 2)
    return PassProbabilities(p_rej=p_rej, p_acc=p_acc)


def walk_hit_probability(walk_length: int) -> Fraction:
    """Chance a fair walk from square 1 reaches N before 0: exactly 1/N."""
    if walk_length < 1:
        raise QcfaError("walk length must be at least 1")
    return Fraction(1, walk_length)


def absorbing_hit_probability(walk_length: int) -> Fraction:
    """The same probability from the absorbing-chain linear system.

    Solves h_i = (h_{i-1} + h_{i+1})/2 with h_0 = 0, h_N = 1 by exact
    tridiagonal elimination; kept independent of the closed form above
    so the two can check each other.
    """
    n = walk_length
    if n < 1:
        raise QcfaError("walk length must be at least 1")
    if n == 1:
        return Fraction(1)
    # Unknowns h_1 .. h_{N-1}; equation i: -h_{i-1} + 2 h_i - h_{i+1} = rhs.
    size = n - 1
    diag = [Fraction(2)] * size
    rhs = [Fraction(0)] * size
    rhs[-1] = Fraction(1)
    for i in range(1, size):
        factor = Fraction(-1) / diag[i - 1]
        diag[i] -= factor * Fraction(-1)
        rhs[i] -= factor * rhs[i - 1]
    h = [Fraction(0)] * size
    h[-1] = rhs[-1] / diag[-1]
    for i in range(size - 2, -1, -1):
        h[i] = (rhs[i] + h[i + 1]) / diag[i]
    return h[0]


def both_preimage_classes() -> list[tuple[int, int, int]]:
    """Residue classes mod 25 of vectors with integer preimages under both.

    u has an integer preimage under a transform exactly when the
    transpose sends it to 0 mod 25 (the transposes are 25 times the
    inverses).  Brute-forced over all 25^3 classes; used by the
    disjointness property test.
    """
    out = []
    for u in product(range(25), repeat=3):
        a_ok = all(x % 25 == 0 for x in MAT_A_INV.mul_vec(u))
        b_ok = all(x % 25 == 0 for x in MAT_B_INV.mul_vec(u))
        if a_ok and b_ok:
            out.append(u)
    return out


def fit_runtime_exponent(lengths, mean_steps) -> float:
    """Least-squares slope of log(mean_steps) against log(length)."""
    if len(lengths) != len(mean_steps) or len(lengths) < 3:
        raise FitError("need at least 3 matching data points")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise FitError("lengths must be strictly increasing")
    if any(m <= 0 for m in mean_steps) or any(x <= 0 for x in lengths):
        raise FitError("lengths and mean steps must be positive")
    xs = [math.log(x) for x in lengths]
    ys = [math.log(m) for m in mean_steps]
    x_bar = sum(xs) / len(xs)
    y_bar = sum(ys) / len(ys)
    num = sum((x - x_bar) * (y - y_bar) for x, y in zip(xs, ys))
    den = sum((x - x_bar) ** 2 for x in xs)
    return num / den
