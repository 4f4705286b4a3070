import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdsta.cdrive import (
    cd_from_derivative,
    cd_from_frames,
    cd_gauge_model,
    cd_gauge_potential,
    cd_matrix_element,
    cd_spectral,
    cd_variational,
    commutator_defect,
    default_variational_basis,
    gauge_frame,
    route_spread,
    variational_fit,
    verify_cd,
)
from cdsta.errors import DegeneracyError, FlatObjectiveError, GaugeDiscontinuityError, RejectedInput
from cdsta.hamiltonians import (
    XY_YX,
    build_model,
    frozen,
    oscillator_cd,
    spin1_angles,
    spin1_unitary,
    spin2_cd_field,
)
from cdsta.operators import SIGMA_X, SIGMA_Y, SIGMA_Z, commutator, eigenframe, frobenius_norm


def rel(a, b):
    return frobenius_norm(a - b) / max(frobenius_norm(a), frobenius_norm(b))


class TestSpectral:
    def test_spin1_midpoint(self, spin1):
        assert frobenius_norm(cd_spectral(spin1, 0.5) - np.pi**2 / 4 * SIGMA_Y) <= 1e-6

    @pytest.mark.parametrize("t", [0.0, 1.0, 0.0001, 0.9999])
    def test_spin1_edges_use_one_sided_stencils(self, spin1, t):
        assert frobenius_norm(cd_spectral(spin1, t) - spin1.cd_analytic(t)) <= 1e-6

    @pytest.mark.parametrize("name", ["spin1", "spin2", "moving_trap"])
    def test_frozen_schedule_gives_zero(self, name):
        model = frozen(build_model(name, **({"N": 16} if name == "moving_trap" else {})), 0.3)
        assert frobenius_norm(cd_spectral(model, 0.5)) <= 1e-8

    def test_spin2_crossing_point(self, spin2):
        h1 = cd_spectral(spin2, 0.0)
        assert h1[0, 3] == pytest.approx(1.25j, abs=1e-6)
        assert h1[3, 0] == pytest.approx(-1.25j, abs=1e-6)
        assert np.allclose(h1[1:3, 1:3], 0, atol=1e-8)

    def test_gauge_jump_detected(self, spin1):
        frames = [eigenframe(spin1.h0(t), time=t) for t in (0.3, 0.3001, 0.3002)]
        flipped = frames[2].rephased(np.array([np.pi, 0.0]))
        with pytest.raises(GaugeDiscontinuityError):
            cd_from_frames([frames[0], frames[1], flipped], 1e-4)

    def test_bad_stencil(self, spin1):
        frames = [eigenframe(spin1.h0(t), time=t) for t in (0.3, 0.3001, 0.3002)]
        with pytest.raises(RejectedInput):
            cd_from_frames(frames, 1e-4, stencil="sideways")


class TestMatrixElement:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.001, 0.999))
    def test_spin1_matches_spectral(self, t):
        from cdsta.hamiltonians import spin1_model

        model = spin1_model(2.0)
        assert frobenius_norm(cd_matrix_element(model, t) - cd_spectral(model, t)) <= 1e-6

    def test_spin2_middle_block_silent(self, spin2):
        for t in (-1.5, -0.3, 0.7, 1.9):
            h1 = cd_matrix_element(spin2, t)
            assert np.allclose(h1[1:3, :], 0, atol=1e-12)
            assert np.allclose(h1[:, 1:3], 0, atol=1e-12)

    def test_oscillator_interior_block(self):
        model = build_model("oscillator", N=64)
        k = 24
        for t in (0.15, 0.3, 0.6, 1.2):
            exact = oscillator_cd(t, N=64)[:k, :k]
            assert np.max(np.abs(cd_matrix_element(model, t)[:k, :k] - exact)) <= 1e-6
            assert np.max(np.abs(cd_spectral(model, t)[:k, :k] - exact)) <= 1e-6

    def test_coupled_degeneracy_names_pair(self):
        with pytest.raises(DegeneracyError) as info:
            cd_from_derivative(np.diag([0.0, 0.0, 1.0]), np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]))
        assert info.value.pair is not None
        assert set(info.value.pair) == {0, 1}

    def test_uncoupled_degeneracy_allowed(self):
        h1 = cd_from_derivative(np.diag([0.0, 0.0, 1.0]), np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]]))
        assert h1[0, 1] == 0 and h1[0, 2] != 0


class TestGauge:
    def test_spin1_gauge_route(self, spin1):
        for t in (0.1, 0.5, 0.8):
            theta, theta_dot, _ = spin1_angles(t)
            h1 = cd_gauge_potential(spin1_unitary, theta, theta_dot)
            assert frobenius_norm(h1 - np.pi**2 / 4 * np.sin(np.pi * t) * SIGMA_Y) <= 1e-8

    def test_frame_properties(self):
        frame = gauge_frame(lambda th: spin1_unitary(th, 0.7 * th), 0.4)
        a = frame.gauge_potential
        assert np.max(np.abs(a - a.conj().T)) <= 1e-10
        assert np.max(np.abs(frame.berry_connection.imag)) <= 1e-10

    def test_moving_trap_translation(self):
        model = build_model("moving_trap", N=24)
        p = model.extras["p"]
        for t in (0.4, 1.1):
            q0_dot = model.extras["path"](t)[1]
            assert np.max(np.abs(cd_gauge_model(model, t) - q0_dot * p)) <= 1e-8

    def test_frozen_parameter(self):
        assert np.allclose(cd_gauge_potential(spin1_unitary, 0.4, 0.0), 0)

    def test_rejects_non_unitary(self):
        with pytest.raises(RejectedInput):
            cd_gauge_potential(lambda lam: 2 * np.eye(2), 0.0, 1.0)


class TestVariational:
    def test_spin1_sigma_y(self, spin1):
        fit = cd_variational(spin1, 0.5, [SIGMA_Y])
        assert fit.coefficients[0] == pytest.approx(np.pi**2 / 4, abs=1e-8)
        assert fit.residual <= 1e-10

    def test_spin1_insufficient_basis(self, spin1):
        h0, dh0 = spin1.h0(0.5), spin1.dh0_dt(0.5)
        fit = variational_fit(h0, dh0, [SIGMA_Z, SIGMA_X])
        baseline = frobenius_norm(commutator(h0, 1j * dh0))
        assert fit.residual > 0.1 * baseline

    def test_spin1_sigma_z_flat(self, spin1):
        # at t=0 H0 = sigma_z, so sigma_z alone commutes with H0 and the objective is flat
        with pytest.raises(FlatObjectiveError):
            cd_variational(spin1, 0.0, [SIGMA_Z])

    def test_spin1_sigma_z_no_improvement(self, spin1):
        h0, dh0 = spin1.h0(0.3), spin1.dh0_dt(0.3)
        fit = variational_fit(h0, dh0, [SIGMA_Z])
        assert fit.residual == pytest.approx(frobenius_norm(commutator(h0, 1j * dh0)), rel=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-1.95, 1.95))
    def test_spin2_coefficient_is_field(self, t):
        from cdsta.hamiltonians import spin2_model

        fit = cd_variational(spin2_model(), t, [0.5 * XY_YX])
        assert fit.coefficients[0] == pytest.approx(spin2_cd_field(t), abs=1e-8)

    def test_spin2_crossing_value(self, spin2):
        assert cd_variational(spin2, 0.0, [0.5 * XY_YX]).coefficients[0] == pytest.approx(-1.25, abs=1e-6)

    def test_residual_recomputed(self, spin2):
        fit = cd_variational(spin2, 0.4, [0.5 * XY_YX, np.kron(SIGMA_X, SIGMA_Y)])
        direct = commutator_defect(spin2.h0(0.4), spin2.dh0_dt(0.4), fit.operator())
        assert fit.residual == pytest.approx(direct, abs=1e-10)

    @pytest.mark.parametrize("name", ["oscillator", "moving_trap"])
    def test_fock_models_windowed(self, name):
        model = build_model(name, N=64)
        basis = default_variational_basis(model)
        for t in (0.3, 0.9):
            fit = cd_variational(model, t, basis)
            k = 24
            assert np.max(np.abs(fit.operator()[:k, :k] - model.cd_analytic(t)[:k, :k])) <= 1e-8

    def test_non_hermitian_basis(self, spin1):
        with pytest.raises(RejectedInput):
            cd_variational(spin1, 0.5, [np.array([[0, 1], [0, 0]])])

    def test_empty_basis(self, spin1):
        with pytest.raises(RejectedInput):
            cd_variational(spin1, 0.5, [])


class TestVerify:
    def test_exact_spin1(self, spin1):
        report = verify_cd(spin1.h0(0.3), spin1.dh0_dt(0.3), spin1.cd_analytic(0.3))
        assert report.ok
        assert all(v <= 1e-8 for v in report.relative.values())

    def test_zero_h1(self, spin1):
        h0, dh0 = spin1.h0(0.5), spin1.dh0_dt(0.5)
        report = verify_cd(h0, dh0, np.zeros((2, 2)))
        assert report.absolute["defect"] == pytest.approx(frobenius_norm(commutator(h0, 1j * dh0)))
        assert report.absolute["defect"] > 0
        assert not report.passed["defect"]

    def test_h1_equals_h0(self, spin1):
        h0 = spin1.h0(0.5)
        report = verify_cd(h0, spin1.dh0_dt(0.5), h0)
        assert report.absolute["orth_h0"] == pytest.approx(frobenius_norm(h0) ** 2)
        assert not report.ok

    def test_degenerate_h0_skips_diagonal(self):
        report = verify_cd(np.eye(2), SIGMA_X, np.zeros((2, 2)))
        assert "diagonal" not in report.relative
        assert report.notes


def test_route_spread_floor():
    a, b = np.zeros((2, 2)), 1e-9 * SIGMA_X
    assert route_spread({"a": a, "b": b})[0] == pytest.approx(1.0)
    assert route_spread({"a": a, "b": b}, floor=1.0)[0] == pytest.approx(np.sqrt(2) * 1e-9)


def test_default_basis_unknown_model(spin1):
    with pytest.raises(RejectedInput):
        default_variational_basis(frozen(spin1, 0.2))


def test_local_trap_driving_is_not_a_cd_term():
    # -q0'' q is unitarily equivalent driving, not the zero-diagonal CD term of H0
    model = build_model("moving_trap", N=32, variant="local")
    t, k = 0.7, 12
    report = verify_cd(model.h0(t)[:k, :k], model.dh0_dt(t)[:k, :k], model.cd_analytic(t)[:k, :k])
    assert not report.passed["diagonal"]
    exact = verify_cd(model.h0(t)[:k, :k], model.dh0_dt(t)[:k, :k], cd_matrix_element(model, t)[:k, :k])
    assert exact.passed["diagonal"] and exact.passed["orth_h0"]
