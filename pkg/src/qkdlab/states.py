"""Entangled-pair source, imperfection model and both eavesdropper channels.

The source is axiomatically the polarization-entangled pair
``(|HH> + |VV>)/sqrt(2)`` plus optional white noise; Eve acts only on the
second photon (the one heading to the receiver).  Two eavesdroppers are
modeled:

* intercept-resend: a projective measurement on photon 2 in a chosen basis,
  the pair continuing in the projected state;
* dephasing: a thick birefringent plate that destroys coherence between the
  two components along its axes, the analytic average of intercept-resend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .optics import MeasBasis, linear_projector

SPEED_OF_LIGHT_MM_PER_FS = 2.99792458e-4  # 299792458 m/s expressed in mm/fs

EVE_MODES = ("absent", "intercept_resend", "dephasing")
BASIS_POLICIES = ("fixed", "random_per_trial")

_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A two-photon polarization state as a 4x4 density matrix.

    The matrix is validated on construction (Hermitian, unit trace, PSD)
    and stored read-only; basis order is HH, HV, VH, VV.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = qmath.as_complex(self.rho)
        if rho.shape != (4, 4):
            raise ValueError("TwoQubitState needs a 4x4 matrix")
        if not qmath.is_density(rho):
            raise ValueError("TwoQubitState: matrix violates density invariants")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class QuartzPlate:
    """Birefringent plate standing in for the eavesdropper.

    ``axis_angle_deg`` orients the fast axis: 0 decoheres the H/V
    components, 45 the D/A components.  The default birefringence is
    back-solved so that an 8 mm plate delays the components by ~207 fs.
    """

    thickness_mm: float
    birefringence: float = 0.00776
    coherence_time_fs: float = 54.0
    axis_angle_deg: float = 0.0

    def __post_init__(self):
        if self.thickness_mm < 0:
            raise ValueError("plate thickness must be nonnegative")
        if self.coherence_time_fs <= 0:
            raise ValueError("coherence time must be positive")


@dataclass(frozen=True)
class EveConfig:
    """Eavesdropper configuration for a protocol session.

    ``basis_angle`` is the polarization angle of Eve's basis in degrees
    (0 = HV, 45 = DA); ``strength`` is the dephasing fraction gamma;
    ``intercept_fraction`` Bernoulli-gates whether Eve touches a given
    trial at all.
    """

    mode: str = "absent"
    basis_angle: float = 0.0
    strength: float = 1.0
    intercept_fraction: float = 1.0
    basis_policy: str = "fixed"

    def __post_init__(self):
        if self.mode not in EVE_MODES:
            raise ValueError(f"eve mode must be one of {EVE_MODES}")
        if self.basis_policy not in BASIS_POLICIES:
            raise ValueError(f"basis policy must be one of {BASIS_POLICIES}")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("strength must be in [0, 1]")
        if not 0.0 <= self.intercept_fraction <= 1.0:
            raise ValueError("intercept_fraction must be in [0, 1]")
        if (self.mode == "intercept_resend" and self.basis_policy == "fixed"
                and basis_from_angle(self.basis_angle) is None):
            raise ValueError("intercept-resend needs basis_angle 0 (HV) or 45 (DA)")


def basis_from_angle(angle_deg: float) -> MeasBasis | None:
    """Map a basis angle to the named measurement basis, if it has a name."""
    a = angle_deg % 90.0
    if np.isclose(a, 0.0) or np.isclose(a, 90.0):
        return MeasBasis.HV
    if np.isclose(a, 45.0):
        return MeasBasis.DA
    return None


def angle_from_basis(basis: MeasBasis) -> float:
    if basis == MeasBasis.HV:
        return 0.0
    if basis == MeasBasis.DA:
        return 45.0
    raise ValueError("only the linear bases HV and DA map to a plate angle")


def bell_phi_plus() -> TwoQubitState:
    """The source state ``(|HH> + |VV>)/sqrt(2)`` as a density matrix."""
    rho = np.zeros((4, 4), dtype=complex)
    for i in (0, 3):
        for j in (0, 3):
            rho[i, j] = 0.5
    return TwoQubitState(rho)


def bell_phi_plus_ket() -> np.ndarray:
    k = np.zeros(4, dtype=complex)
    k[0] = k[3] = 1.0 / np.sqrt(2.0)
    return k


def add_white_noise(s: TwoQubitState, p: float) -> TwoQubitState:
    """Mix in the maximally mixed state: rho' = (1-p) rho + p I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("noise fraction must be in [0, 1]")
    rho = (1.0 - p) * s.rho + p * np.eye(4, dtype=complex) / 4.0
    return TwoQubitState(rho)


def _bob_projectors(basis_angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """(plus, minus) projectors on photon 2 for a linear basis at the given
    polarization angle from horizontal."""
    p_plus = qmath.tensor(_I2, linear_projector(basis_angle_deg))
    p_minus = qmath.tensor(_I2, linear_projector(basis_angle_deg + 90.0))
    return p_plus, p_minus


def dephase_bob(s: TwoQubitState, basis_angle: float, gamma: float) -> TwoQubitState:
    """Partially decohere photon 2 along the basis at ``basis_angle``.

    rho' = (1-gamma) rho + gamma (P+ rho P+ + P- rho P-), acting on the
    second photon only.  gamma = 0 is the identity channel, gamma = 1 kills
    the coherence between the two basis branches entirely.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    p_plus, p_minus = _bob_projectors(basis_angle)
    rho = s.rho
    pinched = p_plus @ rho @ p_plus + p_minus @ rho @ p_minus
    return TwoQubitState((1.0 - gamma) * rho + gamma * pinched)


def intercept_resend(s: TwoQubitState, basis: MeasBasis, rng) -> tuple[int, TwoQubitState]:
    """Eve measures photon 2 in ``basis`` and resends what she saw.

    Returns her bit (plus -> 1, minus -> 0) and the pair's post-measurement
    state.  Averaging the post state over her outcomes reproduces
    ``dephase_bob(s, angle, 1)`` exactly; a zero-probability branch is never
    sampled.
    """
    plus2, minus2 = basis.projectors()
    p_plus_op = qmath.tensor(_I2, plus2)
    p_minus_op = qmath.tensor(_I2, minus2)
    prob_plus = float(np.trace(s.rho @ p_plus_op).real)
    prob_plus = min(max(prob_plus, 0.0), 1.0)
    if rng.random() < prob_plus:
        bit, proj, prob = 1, p_plus_op, prob_plus
    else:
        bit, proj, prob = 0, p_minus_op, 1.0 - prob_plus
    post = proj @ s.rho @ proj / prob
    return bit, TwoQubitState(post)


def plate_delay_fs(plate: QuartzPlate) -> float:
    """Temporal walk-off between the plate's fast and slow components."""
    return plate.birefringence * plate.thickness_mm / SPEED_OF_LIGHT_MM_PER_FS


def plate_gamma(plate: QuartzPlate) -> float:
    """Dephasing strength of a plate: 1 - exp(-(tau/tau_c)^2), clamped.

    Gaussian mutual-coherence decay in the delay tau; a delay well past the
    coherence time gives gamma ~ 1 (a full eavesdropper), a thin plate only
    partially decoheres the pair.
    """
    tau = plate_delay_fs(plate)
    gamma = 1.0 - np.exp(-((tau / plate.coherence_time_fs) ** 2))
    return float(min(max(gamma, 0.0), 1.0))
