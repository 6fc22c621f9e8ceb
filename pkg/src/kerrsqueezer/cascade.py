"""Coupled-mode propagation of fundamental and harmonic through the crystal.

Conventions (fixed; any self-consistent alternative must still conserve
``|a1|^2 + |a2|^2`` and reproduce the phase-matched sech depletion law):

    da1/dz = i kappa conj(a1) a2 exp(+i delta_k z)
    da2/dz = i kappa a1^2      exp(-i delta_k z)

Amplitudes are in sqrt(W), so ``|a|^2`` is optical power and the sum of the
two powers is conserved exactly by the equations.  The integrator is
fixed-step classical Runge-Kutta; power drift is monitored and reported.

In the low-conversion, strongly mismatched regime the accumulated
intensity-dependent phase of the fundamental follows the cascading
formula

    phi_nl = -(kappa^2 p L / delta_k) * (1 - sinc(delta_k L)),

which at the conversion zeros (delta_k L = 2 pi m) reduces to
``-kappa^2 p L^2 / (2 pi m)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import AccuracyError, DomainError, ValidityError

__all__ = [
    "CoupledModeState",
    "CascadeResult",
    "FictitiousMirror",
    "DEFAULT_STEPS",
    "propagate",
    "effective_kerr_phase",
    "extract_cascade_result",
    "fictitious_mirror",
]

DEFAULT_STEPS = 2000
DEFAULT_DRIFT_TOL = 1e-9
MIN_STEPS = 100


@dataclass(frozen=True)
class CoupledModeState:
    """Fundamental and harmonic envelope amplitudes at position ``z``."""

    a1: complex
    a2: complex
    z: float = 0.0

    @property
    def power(self) -> float:
        return abs(self.a1) ** 2 + abs(self.a2) ** 2


@dataclass(frozen=True)
class CascadeResult:
    """Nonlinear phase and residual conversion of a full crystal pass."""

    nl_phase: float
    residual_conversion: float

    def __post_init__(self):
        if not -1e-12 <= self.residual_conversion <= 1.0 + 1e-12:
            raise DomainError(
                f"residual conversion must lie in [0, 1], got {self.residual_conversion}"
            )


class FictitiousMirror(NamedTuple):
    r1: float
    phase_offset: float


def _wrap(phi: float) -> float:
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def _rhs(z, a1, a2, delta_k, kappa):
    mismatch = cmath.exp(1j * delta_k * z)
    return (
        1j * kappa * a1.conjugate() * a2 * mismatch,
        1j * kappa * a1 * a1 / mismatch,
    )


def propagate(
    state: CoupledModeState,
    delta_k: float,
    kappa: float,
    length: float,
    steps: int = DEFAULT_STEPS,
    drift_tol: float = DEFAULT_DRIFT_TOL,
) -> CoupledModeState:
    """Integrate the coupled-mode equations over ``length`` from ``state.z``.

    Raises :class:`AccuracyError` when the relative power drift exceeds
    ``drift_tol`` (increase ``steps`` in that case).
    """
    if steps < MIN_STEPS:
        raise DomainError(f"steps must be >= {MIN_STEPS}, got {steps}")
    if length <= 0.0 or not math.isfinite(length):
        raise DomainError(f"length must be positive, got {length}")
    a1, a2 = complex(state.a1), complex(state.a2)
    z = float(state.z)
    h = length / steps
    for _ in range(steps):
        k1a, k1b = _rhs(z, a1, a2, delta_k, kappa)
        k2a, k2b = _rhs(z + 0.5 * h, a1 + 0.5 * h * k1a, a2 + 0.5 * h * k1b, delta_k, kappa)
        k3a, k3b = _rhs(z + 0.5 * h, a1 + 0.5 * h * k2a, a2 + 0.5 * h * k2b, delta_k, kappa)
        k4a, k4b = _rhs(z + h, a1 + h * k3a, a2 + h * k3b, delta_k, kappa)
        a1 += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        a2 += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        z += h
    out = CoupledModeState(a1, a2, z)
    p_in = state.power
    if p_in > 0.0:
        drift = abs(out.power - p_in) / p_in
        if drift > drift_tol:
            raise AccuracyError(
                f"power drift {drift:.3e} exceeds tolerance {drift_tol:.1e}; "
                f"increase steps (got {steps})",
                measured=drift,
            )
    return out


def effective_kerr_phase(p_in: float, delta_k: float, kappa: float, length: float) -> float:
    """Analytic cascade phase in the low-conversion, mismatched regime.

    Only valid for ``|delta_k * length| >= pi``; closer to phase matching
    direct conversion dominates and no clean phase shift exists.
    """
    if not math.isfinite(p_in) or p_in < 0.0:
        raise DomainError(f"power must be >= 0, got {p_in}")
    x = delta_k * length
    if abs(x) < math.pi:
        raise ValidityError(
            f"|delta_k * L| = {abs(x):.4f} < pi: outside cascade-phase validity"
        )
    sinc_x = math.sin(x) / x
    return -(kappa**2 * p_in * length / delta_k) * (1.0 - sinc_x)


def extract_cascade_result(
    p_in: float,
    delta_k: float,
    kappa: float,
    length: float,
    steps: int = DEFAULT_STEPS,
    drift_tol: float = DEFAULT_DRIFT_TOL,
) -> CascadeResult:
    """Nonlinear phase and residual conversion from the integrator.

    The phase reference is taken from a run at ``p_in / 1000`` rather than
    from linear propagation, which sidesteps absolute refractive indices.
    """
    if not math.isfinite(p_in) or p_in < 0.0:
        raise DomainError(f"power must be >= 0, got {p_in}")
    if p_in == 0.0:
        return CascadeResult(0.0, 0.0)
    start = CoupledModeState(math.sqrt(p_in), 0.0, 0.0)
    out = propagate(start, delta_k, kappa, length, steps, drift_tol)
    ref_start = CoupledModeState(math.sqrt(p_in / 1000.0), 0.0, 0.0)
    ref = propagate(ref_start, delta_k, kappa, length, steps, drift_tol)
    nl_phase = _wrap(cmath.phase(out.a1) - cmath.phase(ref.a1))
    residual = abs(out.a2) ** 2 / p_in
    return CascadeResult(nl_phase, min(residual, 1.0))


def fictitious_mirror(
    p_in: float,
    delta_k: float,
    kappa: float,
    length: float,
    steps: int = DEFAULT_STEPS,
    drift_tol: float = DEFAULT_DRIFT_TOL,
) -> FictitiousMirror:
    """Mid-crystal converted fraction and its phase lag.

    ``r1`` is the power fraction living at the harmonic halfway through
    the crystal, i.e. the reflectivity of the equivalent beam-splitter
    picture of the cascade; it stays finite at conversion zeros where the
    end-of-crystal conversion vanishes.  ``phase_offset`` is the phase of
    the mid-crystal harmonic relative to the local driving polarization
    (conversion drive), zero when phase matched; in the low-conversion
    limit it equals ``delta_k * length / 4``.
    """
    if not math.isfinite(p_in) or p_in < 0.0:
        raise DomainError(f"power must be >= 0, got {p_in}")
    if p_in == 0.0:
        return FictitiousMirror(0.0, 0.0)
    half_steps = max(MIN_STEPS, steps // 2)
    start = CoupledModeState(math.sqrt(p_in), 0.0, 0.0)
    mid = propagate(start, delta_k, kappa, length / 2.0, half_steps, drift_tol)
    r1 = abs(mid.a2) ** 2 / p_in
    if abs(mid.a2) == 0.0:
        phase_offset = 0.0
    else:
        phase_offset = _wrap(
            cmath.phase(mid.a2)
            - 2.0 * cmath.phase(mid.a1)
            + delta_k * length / 2.0
            - 0.5 * math.pi
        )
    return FictitiousMirror(min(r1, 1.0), phase_offset)
