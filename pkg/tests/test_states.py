"""Scalar field, state backends, and the exact outcome sampler."""
import random
from fractions import Fraction

import pytest
from mpmath import mp

from qcfa.errors import ExactnessError
from qcfa.states import (
    GRID,
    ExactState,
    FloatState,
    RotorState,
    Sqrt2Rational,
    build_sampler,
    mpf_to_fraction,
    rotor_sin_sq,
)

S2 = Sqrt2Rational


class TestSqrt2Rational:
    def test_field_axioms_on_random_elements(self):
        rng = random.Random(99)

        def rand():
            return S2(Fraction(rng.randint(-9, 9), rng.randint(1, 7)),
                      Fraction(rng.randint(-9, 9), rng.randint(1, 7)))

        for _ in range(300):
            x, y, z = rand(), rand(), rand()
            assert (x + y) * z == x * z + y * z
            assert x * y == y * x
            assert (x + y) + z == x + (y + z)
            if y != S2(0):
                assert (x / y) * y == x

    def test_ordering_against_floats(self):
        rng = random.Random(4)
        for _ in range(500):
            x = S2(Fraction(rng.randint(-20, 20), rng.randint(1, 9)),
                   Fraction(rng.randint(-20, 20), rng.randint(1, 9)))
            y = S2(Fraction(rng.randint(-20, 20), rng.randint(1, 9)),
                   Fraction(rng.randint(-20, 20), rng.randint(1, 9)))
            if abs(float(x) - float(y)) > 1e-9:
                assert (x < y) == (float(x) < float(y))

    def test_sqrt_rational_cases(self):
        assert S2(Fraction(9, 4)).sqrt() == S2(Fraction(3, 2))
        assert S2(Fraction(1, 2)).sqrt() == S2(0, Fraction(1, 2))
        assert S2(2).sqrt() == S2(0, 1)

    def test_sqrt_full_field_case(self):
        x = S2(Fraction(3), Fraction(2))  # (1 + sqrt2)^2 = 3 + 2 sqrt2
        assert x.sqrt() == S2(1, 1)

    def test_sqrt_not_in_field(self):
        with pytest.raises(ExactnessError):
            S2(3).sqrt()
        with pytest.raises(ValueError):
            S2(-1).sqrt()

    def test_sqrt_of_random_squares(self):
        rng = random.Random(11)
        for _ in range(200):
            x = S2(Fraction(rng.randint(-8, 8), rng.randint(1, 5)),
                   Fraction(rng.randint(-8, 8), rng.randint(1, 5)))
            sq = x * x
            r = sq.sqrt()
            assert r * r == sq
            assert r.sign() >= 0


def test_mpf_to_fraction_roundtrip():
    with mp.workprec(128):
        for v in ("0.5", "0.1", "3.25e-7", "0", "1"):
            x = mp.mpf(v)
            fr = mpf_to_fraction(x)
            assert mp.mpf(fr.numerator) / fr.denominator == x


class TestSampler:
    def test_exact_halves(self):
        s = build_sampler([Fraction(1, 2), Fraction(1, 2)])
        assert s.thresholds == (GRID // 2,)
        assert s.sample(0) == 0
        assert s.sample(GRID // 2 - 1) == 0
        assert s.sample(GRID // 2) == 1
        assert s.sample(GRID - 1) == 1

    def test_zero_weight_outcome_never_sampled(self):
        s = build_sampler([Fraction(0), Fraction(1)])
        assert s.outcomes == (1,)
        for u in (0, 1, GRID // 3, GRID - 1):
            assert s.sample(u) == 1

    def test_interior_zero_weight(self):
        s = build_sampler([Fraction(1, 4), Fraction(0), Fraction(3, 4)])
        assert s.outcomes == (0, 2)
        assert s.sample(GRID // 4 - 1) == 0
        assert s.sample(GRID // 4) == 2

    def test_certain_outcome(self):
        s = build_sampler([Fraction(1), Fraction(0)])
        assert s.outcomes == (0,)
        assert s.sample(GRID - 1) == 0

    def test_mpf_weights_normalized(self):
        with mp.workprec(128):
            s = build_sampler([mp.mpf("0.25"), mp.mpf("0.75")])
        assert s.thresholds == (GRID // 4,)

    def test_weight_below_grid_resolution_is_dropped(self):
        s = build_sampler([Fraction(1, 1 << 70),
                           Fraction((1 << 70) - 1, 1 << 70)])
        assert s.outcomes == (1,)

    def test_thresholds_are_exact_floors(self):
        s = build_sampler([Fraction(11169, 390625),
                           Fraction(379456, 390625)])
        assert s.thresholds == ((11169 << 64) // 390625,)

    def test_sampled_frequencies_match_weights(self):
        rng = random.Random(123)
        s = build_sampler([Fraction(16, 25), Fraction(9, 25)])
        n = 200_000
        hits = sum(s.sample(rng.getrandbits(64)) for _ in range(n))
        p = 9 / 25
        sigma = (p * (1 - p) / n) ** 0.5
        assert abs(hits / n - p) < 4 * sigma


class TestRotor:
    def test_quarter_table_is_exact(self):
        assert rotor_sin_sq(0, 0) == 0
        assert rotor_sin_sq(0, 1) == Fraction(1, 2)
        assert rotor_sin_sq(0, 2) == 1
        assert rotor_sin_sq(0, 6) == 1
        assert rotor_sin_sq(0, -2) == 1

    def test_irrational_angle_matches_direct_trig(self):
        with mp.workprec(200):
            for j in (1, -1, 5, 313):
                direct = mp.sin(mp.pi * mp.sqrt(2) * j) ** 2
                assert abs(rotor_sin_sq(j, 0) - direct) < mp.mpf(2) ** -120

    def test_rotation_and_collapse(self):
        r = RotorState(0, 0)
        r = r.apply_rotation(0, 1, 3, 1)
        assert (r.j, r.m) == (3, 1)
        assert r.collapse((0,)) == RotorState(0, 0)
        assert r.collapse((1,)) == RotorState(0, 2)

    def test_weights_sum_to_one(self):
        w0, w1 = RotorState(7, 3).measure_group_weights(((0,), (1,)))
        assert abs((w0 + w1) - 1) < 1e-30

    def test_rejects_general_unitaries(self):
        with pytest.raises(ExactnessError):
            RotorState(0, 0).apply_matrix(((1, 0), (0, 1)))


class TestExactState:
    def test_quarter_rotation_of_basis(self):
        st = ExactState.basis(3, 0).apply_rotation(0, 1, 0, 1)
        half = Fraction(1, 2)
        assert st.amps[0] == S2(0, half)
        assert st.amps[1] == S2(0, half)
        assert st.norm_sq() == S2(1)

    def test_measurement_weights_of_superposition(self):
        st = ExactState([Fraction(3, 5), Fraction(4, 5), 0])
        w = st.measure_group_weights(((0,), (1, 2)))
        assert w == [Fraction(9, 25), Fraction(16, 25)]

    def test_collapse_preserves_sign(self):
        st = ExactState([Fraction(-3, 5), Fraction(4, 5), 0])
        down = st.collapse((0,))
        assert down.amps[0] == S2(-1)
        assert down.norm_sq() == S2(1)

    def test_eigenstate_collapse_is_identity(self):
        st = ExactState.basis(3, 0)
        assert st.measure_group_weights(((0,), (1, 2))) == [1, 0]
        assert st.collapse((0,)).amps == st.amps

    def test_projector_weights_match_group_weights(self):
        st = ExactState([Fraction(3, 5), Fraction(4, 5), 0])
        p0 = ((1, 0, 0), (0, 0, 0), (0, 0, 0))
        p_rest = ((0, 0, 0), (0, 1, 0), (0, 0, 1))
        assert st.measure_projector_weights((p0, p_rest)) \
            == st.measure_group_weights(((0,), (1, 2)))
        assert st.collapse_projector(p0).amps == st.collapse((0,)).amps

    def test_sign_canonical_key(self):
        a = ExactState([Fraction(3, 5), Fraction(-4, 5), 0])
        b = ExactState([Fraction(-3, 5), Fraction(4, 5), 0])
        assert a.key() == b.key()
        assert a != b  # equality is literal; only the key folds the phase

    def test_sampled_measurement_frequency_16_25(self):
        # squared-amplitude law, cross-checked by sampling
        st = ExactState([Fraction(3, 5), Fraction(4, 5), 0])
        sampler = build_sampler(st.measure_group_weights(((0,), (1, 2))))
        rng = random.Random(2718)
        n = 100_000
        other = sum(sampler.sample(rng.getrandbits(64)) for _ in range(n))
        p = 16 / 25
        sigma = (p * (1 - p) / n) ** 0.5
        assert abs(other / n - p) < 4 * sigma


class TestFloatState:
    def test_rotation_matches_exact_backend(self):
        f = FloatState.basis(3, 0).apply_rotation(0, 1, 0, 1)
        e = ExactState.basis(3, 0).apply_rotation(0, 1, 0, 1)
        with mp.workprec(128):
            for fa, ea in zip(f.amps, e.amps):
                assert abs(fa - ea.to_mpf()) < mp.mpf(2) ** -100

    def test_collapse_renormalizes(self):
        f = FloatState([0.6, 0.8, 0.0]).collapse((1, 2))
        assert abs(f.norm_sq() - 1) < 1e-30
        assert abs(f.amps[1] - 1) < 1e-30

    def test_projector_weights_match_group_weights(self):
        f = FloatState([0.6, 0.8j])
        p0 = ((1, 0), (0, 0))
        p1 = ((0, 0), (0, 1))
        pw = f.measure_projector_weights((p0, p1))
        gw = f.measure_group_weights(((0,), (1,)))
        assert all(abs(a - b) < 1e-30 for a, b in zip(pw, gw))

    def test_not_compilable(self):
        assert FloatState.basis(2, 0).key() is None
