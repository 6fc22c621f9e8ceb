"""Output filtering, efficiency budget and homodyne tomography synthesis.

Dark noise is treated as an additive white variance at ``10^(dark_db/10)``
relative to vacuum and is *not* subtracted from displayed traces (the
subtracted view is available as an option); fits of the quadrature
ellipse can remove the known dark level.  Trace points are displayed at
the video-bandwidth rate and carry a multiplicative estimator noise of
relative width ``1/sqrt(rbw/vbw)``, a deliberate simplification of
spectrum-analyzer averaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .states import (
    GaussianQuadratureState,
    SqueezeObservation,
    apply_loss,
    dephase,
    quadrature_variance,
    variance_to_db,
)

__all__ = [
    "EfficiencyFactor",
    "LossBudget",
    "TomographySettings",
    "TomographyTrace",
    "EllipseFit",
    "total_efficiency",
    "omc_sideband_transfer",
    "scan_phase",
    "simulate_tomography_trace",
    "fit_quadrature_ellipse",
    "end_to_end_observe",
]

SCAN_SHAPES = ("triangle", "sine", "sawtooth", "hold")


@dataclass(frozen=True)
class EfficiencyFactor:
    """One efficiency factor with a one-sigma absolute uncertainty."""

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.value <= 1.0:
            raise DomainError(f"efficiency must lie in (0, 1], got {self.value}")
        if self.sigma < 0.0 or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")

    @property
    def relative_sigma(self) -> float:
        return self.sigma / self.value


@dataclass(frozen=True)
class LossBudget:
    """Ordered chain of efficiencies between source and homodyne signal.

    ``visibility`` is the homodyne fringe visibility; by default it is
    assumed to be already contained in ``bhd_efficiency`` (set
    ``visibility_in_bhd=False`` to multiply the chain by visibility^2
    instead).
    """

    escape: EfficiencyFactor
    omc_transmission: EfficiencyFactor
    shg_residual: EfficiencyFactor
    bhd_efficiency: EfficiencyFactor
    visibility: float = 1.0
    visibility_in_bhd: bool = True

    def __post_init__(self):
        if not 0.0 < self.visibility <= 1.0:
            raise DomainError(f"visibility must lie in (0, 1], got {self.visibility}")

    def factors(self) -> tuple[tuple[str, EfficiencyFactor], ...]:
        return (
            ("escape", self.escape),
            ("omc_transmission", self.omc_transmission),
            ("shg_residual", self.shg_residual),
            ("bhd_efficiency", self.bhd_efficiency),
        )


def total_efficiency(budget: LossBudget) -> EfficiencyFactor:
    """Product of the chain with first-order uncertainty propagation.

    Relative uncertainties add in quadrature; the visibility (uncertainty-
    free) enters squared when not already inside the BHD figure.
    """
    value = 1.0
    rel_sq = 0.0
    for _, factor in budget.factors():
        value *= factor.value
        rel_sq += factor.relative_sigma**2
    if not budget.visibility_in_bhd:
        value *= budget.visibility**2
    return EfficiencyFactor(value, value * math.sqrt(rel_sq))


def omc_sideband_transfer(fsr_sqz: float, omc_finesse: float, f: float) -> float:
    """Power fraction of a sideband reflected off the mode cleaner to the BHD.

    The mode cleaner is a symmetric lossless two-mirror cavity held
    resonant for the carrier, with a free spectral range of exactly twice
    ``fsr_sqz``.  Resonant frequencies (carrier and even multiples of the
    squeezer FSR) are transmitted out of the signal path; odd multiples
    are anti-resonant and reflected to the detector with near-unity
    efficiency (lumped transmission losses live in the budget).
    """
    if fsr_sqz <= 0.0 or not math.isfinite(fsr_sqz):
        raise DomainError(f"fsr_sqz must be positive, got {fsr_sqz}")
    if omc_finesse <= 0.0 or not math.isfinite(omc_finesse):
        raise DomainError(f"omc_finesse must be positive, got {omc_finesse}")
    if f < 0.0 or not math.isfinite(f):
        raise DomainError(f"frequency must be >= 0, got {f}")
    # Mirror amplitude reflectivity from finesse = pi r / (1 - r^2).
    r = (-math.pi + math.sqrt(math.pi**2 + 4.0 * omc_finesse**2)) / (2.0 * omc_finesse)
    phi = math.pi * f / fsr_sqz  # round-trip phase; OMC FSR = 2 * fsr_sqz
    num = r * (1.0 - complex(math.cos(phi), math.sin(phi)))
    den = 1.0 - r * r * complex(math.cos(phi), math.sin(phi))
    return abs(num / den) ** 2


@dataclass(frozen=True)
class TomographySettings:
    """Spectrum-analyzer and phase-scan settings for a zero-span trace."""

    lo_power: float = 0.004  # W, bookkeeping only: variances are vacuum-normalized
    rbw: float = 500e3  # Hz
    vbw: float = 200.0  # Hz
    dark_db: float = -8.2  # electronic dark noise relative to vacuum
    scan_shape: str = "triangle"
    scan_period: float = 2.0  # s
    scan_offset: float = 0.0  # rad, start angle of the scan
    duration: float = 4.0  # s
    rng_seed: int = 0

    def __post_init__(self):
        if not self.rbw > self.vbw > 0.0:
            raise DomainError(f"need rbw > vbw > 0, got rbw={self.rbw}, vbw={self.vbw}")
        if self.duration <= 0.0:
            raise DomainError(f"duration must be positive, got {self.duration}")
        if self.scan_period <= 0.0:
            raise DomainError(f"scan_period must be positive, got {self.scan_period}")
        if self.scan_shape not in SCAN_SHAPES:
            raise DomainError(f"scan_shape must be one of {SCAN_SHAPES}, got {self.scan_shape!r}")
        if self.lo_power <= 0.0:
            raise DomainError(f"lo_power must be positive, got {self.lo_power}")

    @property
    def n_effective(self) -> float:
        """Effective number of averages per displayed point."""
        return self.rbw / self.vbw

    @property
    def dark_variance(self) -> float:
        return 10.0 ** (self.dark_db / 10.0)


class TomographyTrace(NamedTuple):
    time: np.ndarray
    theta: np.ndarray
    measured_db: np.ndarray


class EllipseFit(NamedTuple):
    v_min: float
    v_max: float
    theta0: float


def scan_phase(settings: TomographySettings, t) -> np.ndarray:
    """Local-oscillator phase angle over time; one scan spans pi radians."""
    t = np.asarray(t, dtype=float)
    frac = (t / settings.scan_period) % 1.0
    if settings.scan_shape == "triangle":
        ramp = 2.0 * np.where(frac < 0.5, frac, 1.0 - frac)
    elif settings.scan_shape == "sine":
        ramp = 0.5 * (1.0 - np.cos(2.0 * math.pi * frac))
    elif settings.scan_shape == "sawtooth":
        ramp = frac
    else:  # hold
        ramp = np.zeros_like(frac)
    return settings.scan_offset + math.pi * ramp


def simulate_tomography_trace(
    state: GaussianQuadratureState,
    settings: TomographySettings,
    subtract_dark: bool = False,
) -> TomographyTrace:
    """Zero-span noise trace of ``state`` while the phase angle is scanned.

    The displayed level is the quadrature variance plus the dark variance,
    scaled by the per-point estimator noise; traces are reported in dB
    relative to the dark-free vacuum.  Identical settings and seed give a
    bit-identical trace.
    """
    n_points = max(1, int(round(settings.duration * settings.vbw)))
    t = np.arange(n_points) / settings.vbw
    theta = scan_phase(settings, t)
    v_ideal = quadrature_variance(state, theta)
    rng = np.random.default_rng(settings.rng_seed)
    gain = 1.0 + rng.standard_normal(n_points) / math.sqrt(settings.n_effective)
    total = (v_ideal + settings.dark_variance) * gain
    if subtract_dark:
        total = total - settings.dark_variance
    total = np.maximum(total, 1e-12)
    return TomographyTrace(t, theta, 10.0 * np.log10(total))


def fit_quadrature_ellipse(
    theta: np.ndarray, measured_db: np.ndarray, dark_variance: float = 0.0
) -> EllipseFit:
    """Least-squares fit of V(theta) = c - s*cos(2(theta - theta0)) to a trace.

    The fit runs in the variance domain on the basis (1, cos 2theta,
    sin 2theta); ``dark_variance`` is removed from the fitted offset so the
    returned extrema describe the optical state alone.
    """
    theta = np.asarray(theta, dtype=float)
    v = 10.0 ** (np.asarray(measured_db, dtype=float) / 10.0)
    basis = np.column_stack([np.ones_like(theta), np.cos(2.0 * theta), np.sin(2.0 * theta)])
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    c0, a, b = coef
    spread = math.hypot(a, b)
    theta0 = (0.5 * math.atan2(-b, -a)) % math.pi
    center = c0 - dark_variance
    return EllipseFit(center - spread, center + spread, theta0)


def end_to_end_observe(
    v_min: float,
    v_max: float,
    budget: LossBudget,
    sigma_phase: float = 0.0,
) -> SqueezeObservation:
    """Source spectrum through the loss chain and phase jitter, as dB pair.

    Composition order is fixed: loss first (total budget efficiency as one
    beam-splitter), then Gaussian phase jitter.  The quoted uncertainty is
    the first-order propagation of the budget uncertainty into the
    squeezed-quadrature dB value.
    """
    eta = total_efficiency(budget)
    source = GaussianQuadratureState(v_min, v_max)

    def observed(eta_value: float) -> GaussianQuadratureState:
        return dephase(apply_loss(source, eta_value), sigma_phase)

    out = observed(eta.value)
    if eta.sigma > 0.0:
        lo = observed(max(eta.value - eta.sigma, 1e-12))
        hi = observed(min(eta.value + eta.sigma, 1.0))
        unc = 0.5 * abs(variance_to_db(hi.v_min) - variance_to_db(lo.v_min))
    else:
        unc = 0.0
    return SqueezeObservation(
        squeeze_db=-variance_to_db(out.v_min),
        antisqueeze_db=variance_to_db(out.v_max),
        uncertainty_db=unc,
    )
