"""Steady state and linearized fluctuation analysis of the squeezing resonator.

The classical circulating power obeys the implicit resonance equation

    p_circ = T1 * p_in / |1 - r_eff * exp(i (detuning + phi_nl(p_circ)))|^2,

with ``r_eff = sqrt((1 - T1) (1 - loss))``; an intensity-dependent
round-trip phase ``phi_nl`` skews the resonance and produces bistability.
Fluctuations around a steady state follow the standard linearization

    d(da)/dt = -(gamma_total + i delta_eff) da
               + i epsilon exp(2 i arg(alpha)) da^dag + inputs,

where ``epsilon = g * p_circ * FSR`` is the effective parametric pump rate
set by the Kerr slope ``g = d(phi_nl)/d(p_circ)``, and
``delta_eff = (detuning + 2 g p_circ) * FSR`` includes the self-shift.
Output spectra are computed in a frame where the carrier phase is zero, so
ellipse orientations are relative to the carrier quadrature.

A sideband at absolute frequency f is mapped onto the nearest cavity comb
line n and analyzed with this quasi-degenerate baseband model at offset
``omega = 2 pi (f - n * FSR)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.constants import c as _C_LIGHT
from scipy.optimize import brentq

from .errors import DomainError, NumericalError, ThresholdError

__all__ = [
    "CavityParams",
    "SteadyStateBranch",
    "ResonanceProfile",
    "OperatingPoint",
    "SpectrumPoint",
    "CombAssignment",
    "steady_state_branches",
    "scan_profile",
    "make_operating_point",
    "squeezing_spectrum",
    "sideband_comb_map",
]


@dataclass(frozen=True)
class CavityParams:
    """Geometry and mirror budget of the traveling-wave resonator."""

    round_trip_length: float  # m
    coupler_transmission: float  # T1, power fraction
    round_trip_loss: float  # all other intracavity power loss per round trip
    detuning: float = 0.0  # linear round-trip phase offset from resonance, rad

    def __post_init__(self):
        if not math.isfinite(self.round_trip_length) or self.round_trip_length <= 0.0:
            raise DomainError(f"round_trip_length must be positive, got {self.round_trip_length}")
        if not 0.0 < self.coupler_transmission < 1.0:
            raise DomainError(
                f"coupler_transmission must lie in (0, 1), got {self.coupler_transmission}"
            )
        if not 0.0 <= self.round_trip_loss < 1.0:
            raise DomainError(
                f"round_trip_loss must lie in [0, 1), got {self.round_trip_loss}"
            )
        if not math.isfinite(self.detuning):
            raise DomainError("detuning must be finite")

    @property
    def fsr(self) -> float:
        """Free spectral range in Hz."""
        return _C_LIGHT / self.round_trip_length

    @property
    def r_eff(self) -> float:
        """Effective round-trip amplitude factor."""
        return math.sqrt((1.0 - self.coupler_transmission) * (1.0 - self.round_trip_loss))

    @property
    def finesse(self) -> float:
        return math.pi * math.sqrt(self.r_eff) / (1.0 - self.r_eff)

    @property
    def escape_efficiency(self) -> float:
        """Fraction of the total decay exiting through the coupler."""
        return self.coupler_transmission / (self.coupler_transmission + self.round_trip_loss)

    @property
    def resonant_buildup(self) -> float:
        """Circulating/input power ratio of the linear cavity on resonance."""
        return self.coupler_transmission / (1.0 - self.r_eff) ** 2

    @property
    def gamma_coupler(self) -> float:
        """Coupler half-linewidth decay rate, rad/s."""
        return 0.5 * self.coupler_transmission * self.fsr

    @property
    def gamma_loss(self) -> float:
        return 0.5 * self.round_trip_loss * self.fsr

    @property
    def gamma_total(self) -> float:
        return self.gamma_coupler + self.gamma_loss

    @property
    def linewidth_phase_fwhm(self) -> float:
        """Resonance full width at half maximum in round-trip phase, rad."""
        return 2.0 * (1.0 - self.r_eff) / math.sqrt(self.r_eff)


class SteadyStateBranch(NamedTuple):
    p_circ: float
    stable: bool


class SpectrumPoint(NamedTuple):
    v_min: float
    v_max: float
    theta_min: float


class CombAssignment(NamedTuple):
    index: int
    omega: float


def _eval_phi(phi_nl, p):
    """Evaluate phi_nl on an array, falling back to per-element calls."""
    if phi_nl is None:
        return np.zeros_like(p)
    try:
        out = np.asarray(phi_nl(p), dtype=float)
        if out.shape == p.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(phi_nl(float(x))) for x in p])


def steady_state_branches(
    params: CavityParams,
    p_in: float,
    phi_nl: Optional[Callable[[float], float]] = None,
    n_scan: int = 512,
) -> list[SteadyStateBranch]:
    """All real circulating-power solutions, sorted ascending.

    Roots of ``F(p) = p * |1 - r_eff exp(i(detuning + phi_nl(p)))|^2
    - T1 * p_in`` are located by a sign-change scan over
    ``[0, resonant_buildup * p_in]`` followed by Brent refinement.
    Stability is the slope criterion of the implicit map: a root is stable
    when F is increasing through it.
    """
    if not math.isfinite(p_in) or p_in < 0.0:
        raise DomainError(f"input power must be >= 0, got {p_in}")
    if p_in == 0.0:
        return [SteadyStateBranch(0.0, True)]
    r = params.r_eff
    t1 = params.coupler_transmission
    delta = params.detuning

    def implicit(p: float) -> float:
        phase = delta + (phi_nl(p) if phi_nl is not None else 0.0)
        return p * (1.0 + r * r - 2.0 * r * math.cos(phase)) - t1 * p_in

    p_max = params.resonant_buildup * p_in * (1.0 + 1e-6)
    grid = np.linspace(0.0, p_max, n_scan)
    phases = delta + _eval_phi(phi_nl, grid)
    values = grid * (1.0 + r * r - 2.0 * r * np.cos(phases)) - t1 * p_in

    roots: list[float] = []
    for i in range(len(grid) - 1):
        lo, hi = values[i], values[i + 1]
        if lo == 0.0:
            roots.append(float(grid[i]))
        elif lo * hi < 0.0:
            roots.append(brentq(implicit, grid[i], grid[i + 1], xtol=1e-300, rtol=8.9e-16))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise NumericalError(
            "failed to bracket any steady state "
            f"(p_in={p_in}, detuning={delta}, p_max={p_max}); "
            f"F(0)={values[0]:.3e}, F(p_max)={values[-1]:.3e}"
        )

    dedup: list[float] = []
    for root in sorted(roots):
        if not dedup or root - dedup[-1] > 1e-12 * p_max:
            dedup.append(root)

    h = max(1e-7 * p_max, 1e-18)
    branches = []
    for root in dedup:
        slope = (implicit(root + h) - implicit(max(root - h, 0.0))) / (
            root + h - max(root - h, 0.0)
        )
        branches.append(SteadyStateBranch(root, slope > 0.0))
    return branches


@dataclass(frozen=True)
class ResonanceProfile:
    """Quasi-static cavity scan with adiabatic branch following."""

    detuning: np.ndarray
    p_circ: np.ndarray
    p_trans: np.ndarray
    direction: str
    asymmetry: float
    multi_branch: bool


def _half_max_asymmetry(x: np.ndarray, y: np.ndarray) -> float:
    """|w_left - w_right| / (w_left + w_right) of the half-maximum widths."""
    i_pk = int(np.argmax(y))
    half = 0.5 * y[i_pk]

    def crossing(direction: int) -> float:
        j = i_pk
        while 0 < j + direction < len(y) - 1 and y[j + direction] >= half:
            j += direction
        k = j + direction
        if not 0 <= k < len(y) or y[k] >= half:
            return math.nan
        # Linear interpolation between the last point above and first below.
        frac = (y[j] - half) / (y[j] - y[k])
        return float(x[j] + frac * (x[k] - x[j]))

    x_left = crossing(-1)
    x_right = crossing(+1)
    if math.isnan(x_left) or math.isnan(x_right):
        return math.nan
    w_left = x[i_pk] - x_left
    w_right = x_right - x[i_pk]
    if w_left + w_right == 0.0:
        return math.nan
    return abs(w_left - w_right) / (w_left + w_right)


def scan_profile(
    params: CavityParams,
    p_in: float,
    detunings: Sequence[float],
    phi_nl: Optional[Callable[[float], float]] = None,
    direction: str = "up",
    monitor_transmission: float = 1e-4,
) -> ResonanceProfile:
    """Sweep the detuning quasi-statically and follow one stable branch.

    At bistable points the branch nearest the previous circulating power
    is kept, which reproduces hysteresis jumps at the fold points; the
    model has no scan-speed parameter.  ``p_trans`` is the leakage through
    a weak monitor port, ``monitor_transmission * p_circ``.
    """
    if direction not in ("up", "down"):
        raise DomainError(f"direction must be 'up' or 'down', got {direction!r}")
    dets = np.asarray(detunings, dtype=float)
    if dets.ndim != 1 or len(dets) < 3:
        raise DomainError("detuning sweep needs at least 3 points")
    diffs = np.diff(dets)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise DomainError("detuning sweep must be strictly monotone")
    order = np.argsort(dets)
    if direction == "down":
        order = order[::-1]

    p_follow = np.empty_like(dets)
    multi = False
    p_prev: Optional[float] = None
    for idx in order:
        base = CavityParams(
            params.round_trip_length,
            params.coupler_transmission,
            params.round_trip_loss,
            detuning=float(dets[idx]),
        )
        branches = steady_state_branches(base, p_in, phi_nl)
        if len(branches) >= 3:
            multi = True
        stable = [b.p_circ for b in branches if b.stable] or [b.p_circ for b in branches]
        if p_prev is None:
            choice = stable[0] if direction == "up" else stable[-1]
        else:
            choice = min(stable, key=lambda p: abs(p - p_prev))
        p_follow[idx] = choice
        p_prev = choice

    asym = _half_max_asymmetry(dets, p_follow)
    view = slice(None) if direction == "up" else slice(None, None, -1)
    return ResonanceProfile(
        detuning=dets[view].copy(),
        p_circ=p_follow[view].copy(),
        p_trans=monitor_transmission * p_follow[view],
        direction=direction,
        asymmetry=asym,
        multi_branch=multi,
    )


@dataclass(frozen=True)
class OperatingPoint:
    """Linearization data of one steady state.

    Rates are angular (rad/s): ``gamma_coupler = T1 * FSR / 2``,
    ``gamma_loss = loss * FSR / 2``, ``epsilon = g * p_circ * FSR`` and
    ``delta_eff = (detuning + 2 g p_circ) * FSR``.
    """

    p_circ: float
    nl_phase_rt: float
    epsilon: float
    delta_eff: float
    gamma_total: float
    gamma_coupler: float
    gamma_loss: float

    def __post_init__(self):
        if self.gamma_coupler <= 0.0 or self.gamma_loss < 0.0:
            raise DomainError("decay rates must be positive (coupler) / non-negative (loss)")
        if abs(self.gamma_total - (self.gamma_coupler + self.gamma_loss)) > 1e-9 * self.gamma_total:
            raise DomainError("gamma_total must equal gamma_coupler + gamma_loss")

    @property
    def threshold_epsilon(self) -> float:
        """Pump rate at which the linearized dynamics turn unstable."""
        return math.hypot(self.gamma_total, self.delta_eff)

    @property
    def headroom(self) -> float:
        """threshold_epsilon / |epsilon| (inf for epsilon = 0)."""
        if self.epsilon == 0.0:
            return math.inf
        return self.threshold_epsilon / abs(self.epsilon)

    @property
    def below_threshold(self) -> bool:
        return abs(self.epsilon) < self.threshold_epsilon


def make_operating_point(
    params: CavityParams,
    p_in: float,
    phi_nl: Optional[Callable[[float], float]] = None,
    branch: Optional[int] = None,
    check_threshold: bool = True,
) -> OperatingPoint:
    """Select a steady state and assemble its linearization.

    ``branch`` indexes the sorted branch list and is required when the
    cavity is bistable; otherwise the unique stable branch is used.
    """
    branches = steady_state_branches(params, p_in, phi_nl)
    if branch is not None:
        if not 0 <= branch < len(branches):
            raise DomainError(f"branch index {branch} out of range (found {len(branches)})")
        selected = branches[branch]
    else:
        stable = [b for b in branches if b.stable]
        if len(stable) != 1:
            raise DomainError(
                f"{len(stable)} stable branches found; pass an explicit branch index"
            )
        selected = stable[0]
    p = selected.p_circ

    if phi_nl is None:
        phi_at, slope = 0.0, 0.0
    else:
        dp = max(1e-4 * p, 1e-9)
        phi_at = float(phi_nl(p))
        slope = (float(phi_nl(p + dp)) - float(phi_nl(max(p - dp, 0.0)))) / (
            p + dp - max(p - dp, 0.0)
        )

    fsr = params.fsr
    op = OperatingPoint(
        p_circ=p,
        nl_phase_rt=phi_at,
        epsilon=slope * p * fsr,
        delta_eff=(params.detuning + 2.0 * slope * p) * fsr,
        gamma_total=params.gamma_total,
        gamma_coupler=params.gamma_coupler,
        gamma_loss=params.gamma_loss,
    )
    if check_threshold and not op.below_threshold:
        raise ThresholdError(
            f"operating point at or above threshold: |epsilon| = {abs(op.epsilon):.3e} >= "
            f"{op.threshold_epsilon:.3e} rad/s"
        )
    return op


def squeezing_spectrum(op: OperatingPoint, omega: float) -> SpectrumPoint:
    """Output quadrature spectrum at sideband offset ``omega`` (rad/s).

    Input-output solution of the linearized dynamics with vacuum entering
    through both the coupler and the loss port.  For ``delta_eff = 0`` it
    reduces to ``v_mp = 1 -/+ 4 gamma_coupler epsilon / ((gamma_total +/-
    epsilon)^2 + omega^2)``.  The returned minor-axis angle is relative to
    the carrier quadrature.
    """
    if not op.below_threshold:
        raise ThresholdError(
            f"spectrum undefined at or above threshold (headroom {op.headroom:.3f})"
        )
    if op.epsilon == 0.0:
        # Passive cavity: the output is exactly vacuum at every frequency.
        return SpectrumPoint(1.0, 1.0, 0.0)
    gam, gc, gl = op.gamma_total, op.gamma_coupler, op.gamma_loss
    delta, eps = op.delta_eff, op.epsilon

    drift = np.array([[0.0, delta + eps], [eps - delta, 0.0]])
    m = np.linalg.inv((gam - 1j * omega) * np.eye(2) - drift)
    t_in = 2.0 * gc * m - np.eye(2)
    s_out = t_in @ t_in.conj().T
    if gl > 0.0:
        t_loss = 2.0 * math.sqrt(gc * gl) * m
        s_out = s_out + t_loss @ t_loss.conj().T
    sym = s_out.real
    vals, vecs = np.linalg.eigh(0.5 * (sym + sym.T))
    theta = math.atan2(vecs[1, 0], vecs[0, 0]) % math.pi
    return SpectrumPoint(float(vals[0]), float(vals[1]), theta)


def sideband_comb_map(cavity, frequency: float) -> CombAssignment:
    """Map an absolute sideband frequency onto (comb index, offset).

    ``cavity`` may be a :class:`CavityParams` or a bare FSR in Hz.  The
    offset is ``omega = 2 pi (f - n * FSR)`` with ``n = round(f / FSR)``;
    the spectrum at comb line n is then evaluated with the baseband model
    at that offset (quasi-degenerate approximation).
    """
    fsr = cavity.fsr if hasattr(cavity, "fsr") else float(cavity)
    if fsr <= 0.0 or not math.isfinite(fsr):
        raise DomainError(f"FSR must be positive, got {fsr}")
    if not math.isfinite(frequency) or frequency < 0.0:
        raise DomainError(f"frequency must be >= 0, got {frequency}")
    index = int(round(frequency / fsr))
    omega = 2.0 * math.pi * (frequency - index * fsr)
    return CombAssignment(index, omega)
