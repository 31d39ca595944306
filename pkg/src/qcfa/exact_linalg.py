"""Exact integer algebra for the palindrome transform group.

The palindrome machine's quantum amplitudes always have the form
5^-e * (a, b, c) with integer coordinates.  This module keeps that
representation explicit: a ``ScaledVec3`` is an integer 3-vector plus a
nonnegative power-of-5 exponent, and the four named matrices act on it
by one integer matrix-vector product and an exponent bump.  Everything
is arbitrary precision; 25^n overflows 64-bit words already at n = 14.

Rational values (squared norms, probabilities) are plain
``fractions.Fraction`` objects.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ExactnessError

__all__ = [
    "ScaledVec3",
    "NamedMatrix",
    "MAT_A",
    "MAT_B",
    "MAT_A_INV",
    "MAT_B_INV",
    "MATRICES",
    "UNIT_E1",
    "exact_apply",
    "f_value",
    "in_K",
    "residual_norm_sq",
]

Vec3 = tuple[int, int, int]


@dataclass(frozen=True)
class NamedMatrix:
    """Integer matrix M with M^T M = 25*I; M/5 is the orthogonal action."""

    tag: str
    rows: tuple[Vec3, Vec3, Vec3]

    def __post_init__(self) -> None:
        for i in range(3):
            for j in range(3):
                dot = sum(self.rows[k][i] * self.rows[k][j] for k in range(3))
                expect = 25 if i == j else 0
                if dot != expect:
                    raise ValueError(f"{self.tag}: M^T M != 25*I at ({i},{j})")

    def mul_vec(self, v: Vec3) -> Vec3:
        r = self.rows
        return (
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        )

    def mul_vec_mod(self, v: Vec3, mod: int) -> Vec3:
        x = self.mul_vec(v)
        return (x[0] % mod, x[1] % mod, x[2] % mod)


MAT_A = NamedMatrix("A", ((4, 3, 0), (-3, 4, 0), (0, 0, 5)))
MAT_B = NamedMatrix("B", ((4, 0, 3), (0, 5, 0), (-3, 0, 4)))
# Transposes: M^T M = 25 I makes M^T / 5 the inverse of M / 5.
MAT_A_INV = NamedMatrix("A_inv", ((4, -3, 0), (3, 4, 0), (0, 0, 5)))
MAT_B_INV = NamedMatrix("B_inv", ((4, 0, -3), (0, 5, 0), (3, 0, 4)))

MATRICES = {m.tag: m for m in (MAT_A, MAT_B, MAT_A_INV, MAT_B_INV)}


@dataclass(frozen=True)
class ScaledVec3:
    """Integer 3-vector scaled by 5^-exponent, kept in canonical form.

    Canonical means the coordinates are not all divisible by 5 unless the
    exponent is already 0.  For unit vectors a^2 + b^2 + c^2 = 25^exponent.
    """

    coords: Vec3
    exponent: int = 0

    def __post_init__(self) -> None:
        if self.exponent < 0:
            raise ValueError("exponent must be nonnegative")

    @staticmethod
    def canonical(coords: Vec3, exponent: int) -> "ScaledVec3":
        a, b, c = coords
        while exponent > 0 and a % 5 == 0 and b % 5 == 0 and c % 5 == 0:
            a, b, c = a // 5, b // 5, c // 5
            exponent -= 1
        return ScaledVec3((a, b, c), exponent)

    def norm_sq(self) -> Fraction:
        a, b, c = self.coords
        return Fraction(a * a + b * b + c * c, 25**self.exponent)

    def is_unit(self) -> bool:
        a, b, c = self.coords
        return a * a + b * b + c * c == 25**self.exponent

    def as_fractions(self) -> tuple[Fraction, Fraction, Fraction]:
        d = 5**self.exponent
        a, b, c = self.coords
        return (Fraction(a, d), Fraction(b, d), Fraction(c, d))


UNIT_E1 = ScaledVec3((1, 0, 0), 0)


def exact_apply(m: NamedMatrix, v: ScaledVec3) -> ScaledVec3:
    """Apply the orthogonal action M/5 to v, exactly.

    One matrix-vector product over the integers and an exponent bump,
    then canonicalization.  Unit vectors stay unit vectors.
    """
    return ScaledVec3.canonical(m.mul_vec(v.coords), v.exponent + 1)


def f_value(u: Vec3) -> int:
    """The linear form 4*u1 + 3*u2 + 3*u3 used by the residue invariant."""
    return 4 * u[0] + 3 * u[1] + 3 * u[2]


def in_K(u: Vec3) -> bool:
    """Membership in the mod-5 invariant set K.

    K holds the integer vectors with u1 != 0, f(u) != 0 and u2*u3 == 0,
    all mod 5.  It is closed under A and B and excludes any vector with
    integer preimages under both, which is what separates distinct
    transform words.
    """
    return (
        u[0] % 5 != 0
        and f_value(u) % 5 != 0
        and (u[1] * u[2]) % 5 == 0
    )


def residual_norm_sq(v: ScaledVec3) -> Fraction:
    """Exact squared weight outside the first coordinate, (b^2+c^2)/25^e."""
    if not v.is_unit():
        raise ExactnessError(f"residual_norm_sq needs a unit vector, got {v}")
    _, b, c = v.coords
    return Fraction(b * b + c * c, 25**v.exponent)
