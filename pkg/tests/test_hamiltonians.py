import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdsta.dynamics import gaussian_overlap
from cdsta.errors import RejectedInput
from cdsta.hamiltonians import (
    ParameterSchedule,
    XY_YX,
    build_model,
    frozen,
    moving_trap_terms,
    oscillator_cd,
    oscillator_operators,
    oscillator_schedule,
    quadratic_operators,
    scale_invariant_cd,
    spin1_cd_analytic,
    spin1_effective_field,
    spin1_h0,
    spin1_population_analytic,
    spin2_cd_analytic,
    spin2_cd_field,
    spin2_controls,
    spin2_h0,
    trap_path,
)
from cdsta.operators import SIGMA_Y, SIGMA_Z, commutator, eigenframe, is_hermitian

ALL_MODELS = [
    ("spin1", {"T": 2.0}),
    ("spin1", {"T": 20.0}),
    ("spin2", {"v": 5.0}),
    ("oscillator", {"N": 16}),
    ("moving_trap", {"N": 16}),
]


@pytest.mark.parametrize("name,params", ALL_MODELS)
def test_models_hermitian_and_derivative_consistent(name, params):
    model = build_model(name, **params)
    lo, hi = model.domain
    for t in np.linspace(lo, hi, 25):
        assert is_hermitian(model.h0(t))
    assert model.dh0_error(points=200) <= 1e-6
    assert model.schedule.derivative_error(points=200) <= 1e-6


def test_unknown_model():
    with pytest.raises(RejectedInput):
        build_model("spin3")


def test_numeric_schedule_matches_analytic():
    sched = ParameterSchedule.numeric(lambda t: {"x": np.sin(t)}, (0.0, 1.0))
    assert sched.derivative(0.4)["x"] == pytest.approx(np.cos(0.4), abs=1e-6)


class TestSpin1:
    def test_endpoints(self):
        assert np.allclose(spin1_h0(0.0, 2.0), SIGMA_Z)
        assert np.allclose(spin1_h0(1.0, 2.0), -SIGMA_Z, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0.1, 50))
    def test_isospectral(self, t, T):
        assert np.allclose(eigenframe(spin1_h0(t, T)).energies, [-T / 2, T / 2], atol=1e-12 * T)

    def test_domain(self):
        with pytest.raises(RejectedInput):
            spin1_h0(1.5, 2.0)
        with pytest.raises(RejectedInput):
            spin1_h0(-0.1, 2.0)

    def test_cd_values(self):
        assert np.allclose(spin1_cd_analytic(0.0), 0)
        assert np.allclose(spin1_cd_analytic(0.5), np.pi**2 / 4 * SIGMA_Y)
        assert np.pi**2 / 4 == pytest.approx(2.4674, abs=1e-4)
        assert np.allclose(spin1_cd_analytic(1.0), 0, atol=1e-15)

    def test_effective_field(self):
        assert np.allclose(spin1_effective_field(0.0, 2.0), [0, 0, 2])
        assert np.allclose(spin1_effective_field(0.5, 2.0), [2, np.pi**2 / 2, 0], atol=1e-14)
        for T in (2.0, 10.0, 20.0):
            assert np.linalg.norm(spin1_effective_field(0.0, T)) == pytest.approx(T)

    def test_effective_field_reproduces_total_h(self, spin1):
        for t in np.linspace(0, 1, 11):
            b = spin1_effective_field(t, 2.0)
            h = 0.5 * (b[0] * np.array([[0, 1], [1, 0]]) + b[1] * SIGMA_Y + b[2] * SIGMA_Z)
            assert np.allclose(h, spin1.h_total(t))

    def test_population_closed_form(self):
        assert spin1_population_analytic(0.0, 7.0) == pytest.approx((1.0, 0.0))
        # oracle: 1/2 + 2/sqrt(16 + pi^4)
        oracle = 0.5 + 2 / np.sqrt(16 + np.pi**4)
        assert np.sqrt(16 + np.pi**4) == pytest.approx(10.6494, abs=1e-4)
        assert spin1_population_analytic(0.5, 2.0)[0] == pytest.approx(oracle, abs=1e-15)
        assert spin1_population_analytic(0.5, 2.0)[0] == pytest.approx(0.68780, abs=1e-5)
        assert spin1_population_analytic(0.5, 1e8)[0] == pytest.approx(1.0, abs=1e-6)


class TestSpin2:
    def test_t0_values(self):
        c = spin2_controls(0.0, 5.0)
        assert (c["Jx"], c["Jy"], c["h"]) == pytest.approx((0.0, 0.0, -1.0), abs=1e-15)
        assert eigenframe(spin2_h0(0.0, 5.0)).energies[0] == pytest.approx(-2.0)

    def test_initial_ground_state(self):
        ground = eigenframe(spin2_h0(-2.0, 5.0)).vectors[:, 0]
        assert abs(ground[0]) ** 2 > 0.99

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-2, 2))
    def test_middle_block(self, t):
        c = spin2_controls(t, 5.0)
        block = spin2_h0(t, 5.0)[1:3, 1:3]
        assert np.allclose(np.sort(np.linalg.eigvalsh(block)),
                           np.sort([c["Jx"] + c["Jy"], -(c["Jx"] + c["Jy"])]), atol=1e-12)

    def test_cd_field(self):
        assert spin2_cd_field(0.0, 5.0) == pytest.approx(-1.25, abs=1e-12)
        assert abs(spin2_cd_field(40.0, 5.0)) < 1e-12

    def test_cd_matrix_corners(self):
        f = spin2_cd_field(0.3, 5.0)
        h1 = spin2_cd_analytic(0.3, 5.0)
        assert np.allclose(h1, 0.5 * f * XY_YX)
        assert h1[0, 3] == pytest.approx(-1j * f)
        assert h1[3, 0] == pytest.approx(1j * f)


class TestOscillator:
    def test_commutator_corners(self):
        q, p = oscillator_operators(12)
        c = commutator(q, p)
        assert c[0, 0] == pytest.approx(1j)
        assert c[-1, -1] == pytest.approx(1j * (1 - 12))

    def test_number_operator(self):
        ops = quadratic_operators(12)
        assert (ops["q2"] + ops["p2"])[0, 0] == pytest.approx(1.0)
        assert np.allclose(np.diag(ops["q2"] + ops["p2"]), 2 * np.arange(12) + 1)

    def test_rejects_small_basis(self):
        with pytest.raises(RejectedInput):
            oscillator_operators(4)

    def test_schedule_start(self):
        assert oscillator_schedule(0.0) == pytest.approx((1.0, 0.0, 0.0, 1.0))

    def test_schedule_end_frequency(self):
        w, _, _, wp = oscillator_schedule(1.5)
        assert w == pytest.approx(4 / 3, abs=2e-4)
        assert abs(wp - w) < 1e-3

    @pytest.mark.xfail(strict=True, reason="omega' - omega is about 5.7e-4 at t=5T; the 1e-6 bound is not reachable")
    def test_schedule_end_frequency_tight(self):
        w, _, _, wp = oscillator_schedule(1.5)
        assert abs(wp - w) < 1e-6

    def test_radicand_positive(self):
        for t in np.linspace(0, 1.5, 3001):
            oscillator_schedule(t)

    def test_cd(self):
        assert np.allclose(oscillator_cd(0.0), 0)
        for t in np.linspace(0.05, 1.5, 10):
            h1 = oscillator_cd(t, N=32)
            assert np.allclose(np.diag(h1), 0)
            h0 = build_model("oscillator", N=32).h0(t)
            assert abs(np.vdot(h0, h1)) < 1e-10

    def test_scale_invariant_reduces_to_oscillator(self):
        N, k = 32, 24
        q, p = oscillator_operators(N)
        for t in (0.2, 0.5, 0.9):
            w, wd, _, _ = oscillator_schedule(t)
            gamma = np.sqrt(1.0 / w)
            gamma_dot = -0.5 * gamma * wd / w
            assert gamma_dot / gamma == pytest.approx(-wd / (2 * w))
            h1 = scale_invariant_cd(gamma, gamma_dot, 0.0, 0.0, q, p)
            assert np.allclose(h1[:k, :k], oscillator_cd(t, N=N)[:k, :k], atol=1e-12)

    def test_scale_invariant_limits(self):
        q, p = oscillator_operators(10)
        assert np.allclose(scale_invariant_cd(1.0, 0.0, 0.3, 0.0, q, p), 0)
        assert np.allclose(scale_invariant_cd(1.0, 0.0, 0.3, 0.7, q, p), 0.7 * p)
        with pytest.raises(RejectedInput):
            scale_invariant_cd(0.0, 1.0, 0.0, 0.0, q, p)

    def test_gaussian_overlap(self):
        assert gaussian_overlap(1.3, 1.3) == pytest.approx(1.0)
        assert gaussian_overlap(1.0, 4 / 3) == pytest.approx(0.98974, abs=1e-5)
        assert gaussian_overlap(1.0, 4.0) == pytest.approx(0.8)
        with pytest.raises(RejectedInput):
            gaussian_overlap(0.0, 1.0)


class TestMovingTrap:
    def test_static_and_uniform(self):
        q, p = oscillator_operators(16)
        _, nonlocal_cd, local_cd = moving_trap_terms(0.0, lambda t: (0.5, 0.0, 0.0), N=16)
        assert np.allclose(nonlocal_cd, 0) and np.allclose(local_cd, 0)
        _, nonlocal_cd, local_cd = moving_trap_terms(0.0, lambda t: (0.5, 1.5, 0.0), N=16)
        assert np.allclose(local_cd, 0)
        assert np.allclose(nonlocal_cd, 1.5 * p)

    def test_nonlocal_is_translation_generator(self):
        q, p = oscillator_operators(16)
        path = lambda t: trap_path(t)
        for t in (0.3, 1.0, 1.7):
            q0, q0_dot, _ = path(t)
            _, nonlocal_cd, _ = moving_trap_terms(t, path, N=16)
            assert np.allclose(nonlocal_cd, scale_invariant_cd(1.0, 0.0, q0, q0_dot, q, p))

    def test_path_endpoints_at_rest(self):
        assert trap_path(0.0) == pytest.approx((0, 0, 0))
        assert trap_path(2.0) == pytest.approx((2, 0, 0), abs=1e-12)


def test_frozen_model(spin1):
    fm = frozen(spin1, 0.4)
    assert np.allclose(fm.h0(0.9), spin1.h0(0.4))
    assert np.allclose(fm.dh0_dt(0.1), 0)
