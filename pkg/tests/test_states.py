import numpy as np
import pytest

from qkdlab import qmath
from qkdlab.optics import MeasBasis
from qkdlab.states import (EveConfig, QuartzPlate, TwoQubitState, add_white_noise,
                           basis_from_angle, bell_phi_plus, bell_phi_plus_ket,
                           dephase_bob, intercept_resend, plate_delay_fs, plate_gamma)

from conftest import assert_close, binomial_sigma, random_density

BELL_MATRIX = np.array([
    [0.5, 0, 0, 0.5],
    [0.0, 0, 0, 0.0],
    [0.0, 0, 0, 0.0],
    [0.5, 0, 0, 0.5],
], dtype=complex)

HV_MIXTURE = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)

# hand-written diagonal-basis projectors for the brute-force channel oracle
P_D = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
P_A = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class _ForcedRng:
    """Stub generator whose random() pins intercept_resend to one branch."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


def test_bell_matrix_corners():
    assert_close(bell_phi_plus().rho, BELL_MATRIX, tol=1e-15)


def test_bell_same_in_diagonal_basis():
    rho = bell_phi_plus().rho
    both_diag = np.kron(P_D, P_D) + np.kron(P_A, P_A)
    assert np.trace(rho @ both_diag).real == pytest.approx(1.0, abs=1e-12)


def test_bell_joint_hv_probabilities():
    diag = np.diag(bell_phi_plus().rho).real
    assert_close(diag, [0.5, 0.0, 0.0, 0.5], tol=1e-15)


def test_white_noise_limits():
    s = bell_phi_plus()
    assert_close(add_white_noise(s, 0.0).rho, s.rho, tol=1e-15)
    assert_close(add_white_noise(s, 1.0).rho, np.eye(4) / 4.0, tol=1e-15)


def test_white_noise_source_fidelity():
    # direct <psi|rho'|psi> evaluation; closed form 1 - 3p/4
    psi = bell_phi_plus_ket()
    noisy = add_white_noise(bell_phi_plus(), 0.04).rho
    measured = (psi.conj() @ noisy @ psi).real
    assert measured == pytest.approx(1.0 - 3 * 0.04 / 4.0, abs=1e-12)
    assert measured == pytest.approx(0.97, abs=1e-12)


def test_dephase_full_hv_gives_mixture():
    out = dephase_bob(bell_phi_plus(), 0.0, 1.0)
    assert_close(out.rho, HV_MIXTURE, tol=1e-12)


def test_dephase_full_da_matches_brute_force():
    rho = bell_phi_plus().rho
    expected = (np.kron(I2, P_D) @ rho @ np.kron(I2, P_D)
                + np.kron(I2, P_A) @ rho @ np.kron(I2, P_A))
    out = dephase_bob(bell_phi_plus(), 45.0, 1.0)
    assert_close(out.rho, expected, tol=1e-12)
    # entry pattern: 1/4 on both 2x2 corner sub-blocks' corners
    quarter_positions = [(0, 0), (0, 3), (3, 0), (3, 3), (1, 1), (1, 2), (2, 1), (2, 2)]
    for i in range(4):
        for j in range(4):
            want = 0.25 if (i, j) in quarter_positions else 0.0
            assert out.rho[i, j] == pytest.approx(want, abs=1e-12)


def test_dephase_zero_strength_is_identity(rng):
    for _ in range(10):
        s = TwoQubitState(random_density(rng))
        angle = rng.uniform(0, 180)
        assert_close(dephase_bob(s, angle, 0.0).rho, s.rho, tol=1e-12)


def test_dephase_preserves_trace_and_hermiticity(rng):
    for _ in range(25):
        s = TwoQubitState(random_density(rng))
        out = dephase_bob(s, rng.uniform(0, 180), rng.uniform(0, 1)).rho
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        assert qmath.is_hermitian(out)


def test_dephase_kills_cross_basis_coherence(rng):
    # at gamma = 1 no coherence between the two branches survives, checked
    # in the rotated basis of the plate
    from qkdlab.optics import linear_ket
    for angle in (0.0, 45.0, 30.0):
        s = TwoQubitState(random_density(rng))
        out = dephase_bob(s, angle, 1.0).rho
        plus = linear_ket(angle)
        minus = linear_ket(angle + 90.0)
        coherence = np.kron(I2, plus.reshape(1, 2).conj()) @ out @ np.kron(I2, minus.reshape(2, 1))
        assert np.max(np.abs(coherence)) < 1e-12


def test_dephase_corner_closed_form():
    for gamma in (0.0, 0.25, 0.5, 1.0):
        out = dephase_bob(bell_phi_plus(), 0.0, gamma)
        assert out.rho[0, 3].real == pytest.approx((1.0 - gamma) / 2.0, abs=1e-12)


def test_dephase_full_strength_idempotent(rng):
    s = TwoQubitState(random_density(rng))
    once = dephase_bob(s, 0.0, 1.0)
    assert_close(dephase_bob(once, 0.0, 1.0).rho, once.rho, tol=1e-12)


def test_intercept_eve_bit_is_fair_on_entangled_input(rng):
    n = 4000
    bits = [intercept_resend(bell_phi_plus(), MeasBasis.DA, rng)[0] for _ in range(n)]
    freq = np.mean(bits)
    assert abs(freq - 0.5) < 4 * binomial_sigma(0.5, n)


def test_intercept_on_eigenstate_is_invisible(rng):
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    s = TwoQubitState(rho)
    for _ in range(50):
        bit, post = intercept_resend(s, MeasBasis.HV, rng)
        assert bit == 1
        assert_close(post.rho, rho, tol=1e-12)


def test_intercept_branch_average_equals_full_dephasing():
    for state in (bell_phi_plus(), TwoQubitState(random_density(np.random.default_rng(5)))):
        for basis, angle in ((MeasBasis.HV, 0.0), (MeasBasis.DA, 45.0)):
            plus2, _ = basis.projectors()
            p_plus = np.trace(state.rho @ np.kron(I2, plus2)).real
            _, post_plus = intercept_resend(state, basis, _ForcedRng(0.0))
            _, post_minus = intercept_resend(state, basis, _ForcedRng(0.999999999))
            mixture = p_plus * post_plus.rho + (1.0 - p_plus) * post_minus.rho
            assert_close(mixture, dephase_bob(state, angle, 1.0).rho, tol=1e-12)


def test_plate_gamma_thick_plate():
    plate = QuartzPlate(thickness_mm=8.0)
    tau = plate_delay_fs(plate)
    # numeric oracle for the delay: dn * d / c
    assert tau == pytest.approx(0.00776 * 8.0 / 2.99792458e-4, rel=1e-12)
    assert 206.0 < tau < 208.0
    gamma = plate_gamma(plate)
    assert gamma == pytest.approx(1.0 - np.exp(-((tau / 54.0) ** 2)), abs=1e-15)
    assert gamma > 0.999


def test_plate_gamma_zero_thickness():
    assert plate_gamma(QuartzPlate(thickness_mm=0.0)) == 0.0


def test_plate_gamma_partial_plate():
    plate = QuartzPlate(thickness_mm=1.0)
    tau = plate_delay_fs(plate)
    expected_gamma = 1.0 - np.exp(-((tau / 54.0) ** 2))
    gamma = plate_gamma(plate)
    assert gamma == pytest.approx(expected_gamma, abs=1e-15)
    assert gamma == pytest.approx(0.205, abs=0.002)
    # entanglement left in the partially decohered pair
    from qkdlab.tomography import tangle
    remaining = tangle(dephase_bob(bell_phi_plus(), plate.axis_angle_deg, gamma))
    assert remaining == pytest.approx((1.0 - gamma) ** 2, abs=1e-9)
    assert 0.5 < remaining < 0.85


def test_monte_carlo_intercept_matches_dephasing(rng):
    from qkdlab.detection import joint_probs, sample_trial
    n = 20000
    basis = MeasBasis.HV
    counts = np.zeros(4)
    bell = bell_phi_plus()
    for _ in range(n):
        _, post = intercept_resend(bell, basis, rng)
        a_bit, b_bit = sample_trial(post, MeasBasis.HV, MeasBasis.HV, rng)
        counts[(1 - a_bit) * 2 + (1 - b_bit)] += 1
    analytic = joint_probs(dephase_bob(bell, 0.0, 1.0), MeasBasis.HV, MeasBasis.HV)
    for cell, p in zip(counts / n, analytic):
        assert abs(cell - p) <= 4 * binomial_sigma(max(p, 1e-9), n) + 1e-9


def test_composed_dephasing_loses_nonlocality(rng):
    from qkdlab.tomography import chsh
    s = dephase_bob(dephase_bob(bell_phi_plus(), 0.0, 1.0), 45.0, 1.0)
    for _ in range(20):
        angles = rng.uniform(0, 180, size=4)
        assert abs(chsh(s, *angles)) <= 2.0 + 1e-9


def test_eve_config_validation():
    with pytest.raises(ValueError):
        EveConfig(mode="nope")
    with pytest.raises(ValueError):
        EveConfig(mode="dephasing", strength=1.5)
    with pytest.raises(ValueError):
        EveConfig(mode="intercept_resend", basis_angle=30.0)
    assert basis_from_angle(45.0) == MeasBasis.DA
    assert basis_from_angle(90.0) == MeasBasis.HV
    assert basis_from_angle(30.0) is None


def test_state_validation_rejects_bad_matrices():
    with pytest.raises(ValueError):
        TwoQubitState(np.eye(4, dtype=complex))  # trace 4
    bad = np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex)
    with pytest.raises(ValueError):
        TwoQubitState(bad)
