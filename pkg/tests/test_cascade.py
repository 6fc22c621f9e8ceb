import math

import pytest

from kerrsqueezer import (
    AccuracyError,
    CoupledModeState,
    DomainError,
    ValidityError,
    effective_kerr_phase,
    extract_cascade_result,
    fictitious_mirror,
    propagate,
)

LENGTH = 0.0093


class TestPropagate:
    def test_zero_coupling_is_identity(self):
        start = CoupledModeState(1.3 + 0.2j, 0.1 - 0.4j)
        out = propagate(start, 500.0, 0.0, LENGTH)
        assert out.a1 == start.a1 and out.a2 == start.a2

    def test_phase_matched_sech_oracle(self):
        # Closed-form depleted SHG: |a1(z)| = |a1(0)| sech(kappa |a1(0)| z).
        kappa, p0 = 150.0, 1.0
        out = propagate(CoupledModeState(math.sqrt(p0), 0.0), 0.0, kappa, LENGTH)
        xi = kappa * math.sqrt(p0) * LENGTH
        assert abs(out.a1) == pytest.approx(math.sqrt(p0) / math.cosh(xi), rel=1e-6)
        assert abs(out.a2) == pytest.approx(math.sqrt(p0) * math.tanh(xi), rel=1e-6)

    def test_power_conservation_default_steps(self):
        kappa, p0 = 150.0, 1.0
        out = propagate(CoupledModeState(math.sqrt(p0), 0.0), 3000.0, kappa, LENGTH)
        assert abs(out.power - p0) / p0 < 1e-9

    def test_full_back_conversion_at_first_zero(self):
        out = extract_cascade_result(0.01, 2 * math.pi / LENGTH, 14.0, LENGTH)
        assert out.residual_conversion < 1e-6

    def test_step_floor(self):
        with pytest.raises(DomainError):
            propagate(CoupledModeState(1.0, 0.0), 0.0, 1.0, LENGTH, steps=50)

    def test_accuracy_error_reports_drift(self):
        with pytest.raises(AccuracyError) as err:
            propagate(
                CoupledModeState(1.0, 0.0), 0.0, 300.0, LENGTH, steps=100, drift_tol=1e-16
            )
        assert err.value.measured is not None and err.value.measured > 1e-16

    def test_fourth_order_convergence(self):
        # Richardson: successive halvings shrink the change by ~2^4.
        kappa = 150.0
        dk = 2 * math.pi / LENGTH

        def endpoint(steps):
            out = propagate(
                CoupledModeState(1.0, 0.0), dk, kappa, LENGTH, steps=steps, drift_tol=1e-3
            )
            return out.a1

        coarse, mid, fine = endpoint(100), endpoint(200), endpoint(400)
        diff1 = abs(coarse - mid)
        diff2 = abs(mid - fine)
        assert diff2 < diff1 / 15.0


class TestEffectiveKerrPhase:
    def test_zero_power(self):
        assert effective_kerr_phase(0.0, 2 * math.pi / LENGTH, 14.0, LENGTH) == 0.0

    def test_first_minimum_value(self):
        p, kappa = 0.2, 14.0
        dk = 2 * math.pi / LENGTH
        assert effective_kerr_phase(p, dk, kappa, LENGTH) == pytest.approx(
            -(kappa**2) * p * LENGTH**2 / (2 * math.pi), rel=1e-12
        )

    def test_sign_flips_with_mismatch(self):
        p, kappa = 0.2, 14.0
        dk = 2 * math.pi / LENGTH
        assert effective_kerr_phase(p, dk, kappa, LENGTH) < 0
        assert effective_kerr_phase(p, -dk, kappa, LENGTH) > 0

    def test_validity_region(self):
        with pytest.raises(ValidityError):
            effective_kerr_phase(0.2, 0.5 * math.pi / LENGTH, 14.0, LENGTH)

    @pytest.mark.parametrize("mult", [2.0, -2.0, 2.4, 3.0, -3.0, 4.0, 6.0])
    def test_matches_ode_oracle(self, mult):
        # Whenever residual conversion stays below 1e-3 the analytic phase
        # and the integrated one agree to 1%.
        p, kappa = 0.2, 14.0
        dk = mult * math.pi / LENGTH
        ode = extract_cascade_result(p, dk, kappa, LENGTH)
        assert ode.residual_conversion < 1e-3
        analytic = effective_kerr_phase(p, dk, kappa, LENGTH)
        assert ode.nl_phase == pytest.approx(analytic, rel=0.01)


class TestExtractCascade:
    def test_linear_in_power(self):
        kappa = 14.0
        dk = 2 * math.pi / LENGTH
        one = extract_cascade_result(0.1, dk, kappa, LENGTH)
        two = extract_cascade_result(0.2, dk, kappa, LENGTH)
        assert two.nl_phase == pytest.approx(2 * one.nl_phase, rel=0.01)
        assert one.nl_phase < 0

    def test_antisymmetric_in_mismatch(self):
        kappa = 14.0
        dk = 2.3 * math.pi / LENGTH
        pos = extract_cascade_result(0.2, dk, kappa, LENGTH)
        neg = extract_cascade_result(0.2, -dk, kappa, LENGTH)
        assert neg.nl_phase == pytest.approx(-pos.nl_phase, rel=1e-10)
        assert neg.residual_conversion == pytest.approx(pos.residual_conversion, rel=1e-10)

    def test_phase_matched_pure_depletion(self):
        # At zero mismatch the crystal depletes but does not phase shift.
        out = extract_cascade_result(0.5, 0.0, 14.0, LENGTH)
        assert abs(out.nl_phase) < 1e-9
        off = extract_cascade_result(0.5, 2 * math.pi / LENGTH, 14.0, LENGTH)
        assert out.residual_conversion > 100 * off.residual_conversion

    def test_zero_power(self):
        out = extract_cascade_result(0.0, 1000.0, 14.0, LENGTH)
        assert out.nl_phase == 0.0 and out.residual_conversion == 0.0


class TestFictitiousMirror:
    def test_vanishes_with_power(self):
        assert fictitious_mirror(0.0, 2 * math.pi / LENGTH, 14.0, LENGTH).r1 == 0.0
        small = fictitious_mirror(1e-4, 2 * math.pi / LENGTH, 14.0, LENGTH).r1
        assert small < 1e-6

    def test_monotone_in_power(self):
        dk = 2 * math.pi / LENGTH
        powers = [0.05, 0.1, 0.2, 0.4, 0.8]
        r1s = [fictitious_mirror(p, dk, 14.0, LENGTH).r1 for p in powers]
        assert all(b > a for a, b in zip(r1s, r1s[1:]))

    def test_mid_crystal_conversion_at_zero(self):
        # Light is converted at mid-crystal even though none leaves the end.
        dk = 2 * math.pi / LENGTH
        mirror = fictitious_mirror(0.2, dk, 14.0, LENGTH)
        end = extract_cascade_result(0.2, dk, 14.0, LENGTH)
        assert end.residual_conversion < 1e-6
        assert mirror.r1 > 1e-4
        # Low-conversion closed form: r1 = 4 kappa^2 p / dk^2.
        assert mirror.r1 == pytest.approx(4 * 14.0**2 * 0.2 / dk**2, rel=2e-3)

    def test_phase_offset_low_conversion(self):
        dk = 2 * math.pi / LENGTH
        mirror = fictitious_mirror(0.05, dk, 14.0, LENGTH)
        assert mirror.phase_offset == pytest.approx(dk * LENGTH / 4, abs=2e-3)
