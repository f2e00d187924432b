"""Seeded Monte Carlo of switching events under CW, ramp and pulsed protocols.

Randomness contract
-------------------
All draws come from counter-based Philox streams.  The sub-stream for a
given role is ``Generator(Philox(key=[master_seed, stream_index]))`` where
``stream_index`` is:

- CW mode: 0 dark arrivals, 1 photon arrivals, 2 photon conversion
- ramp mode: ``RAMP_STREAM_BASE + trial_index`` (one stream per trial)
- pulse mode: ``PULSE_STREAM_BASE + pulse_index`` (one stream per pulse)

This rule is part of the public contract and stays stable across versions:
identical (seed, protocol, parameters) produce bit-identical traces, and
per-trial outcomes do not depend on evaluation order, so trials can run in
parallel and be assembled in any order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import escape
from .escape import LightModelParams
from .junction import JunctionParams

__all__ = [
    "CWProtocol",
    "RampProtocol",
    "PulseProtocol",
    "EventTrace",
    "PulseResult",
    "substream",
    "simulate_cw",
    "simulate_ramp",
    "sample_switching_currents",
    "switching_density_from_rate",
    "simulate_pulse",
    "bin_counts",
]

RAMP_STREAM_BASE = 1 << 20
PULSE_STREAM_BASE = 1 << 21

_MASK64 = (1 << 64) - 1


def substream(master_seed: int, stream_index: int) -> np.random.Generator:
    """Independent generator for (master seed, stream index); see module doc."""
    key = [int(master_seed) & _MASK64, int(stream_index) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class CWProtocol:
    """Continuous-wave counting protocol.

    ``dead_time`` is the reset/latch recovery window after each registered
    switch; the 1 ms default stands in for the bandwidth-limited reset
    circuitry and is configurable.  ``photon_rate`` is the absorbed photon
    arrival rate delivered by the illumination.
    """

    i_b: float                 # bias current [A]
    duration: float            # [s]
    photon_rate: float = 0.0   # [Hz]
    dead_time: float = 1e-3    # [s]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.dead_time < 0 or self.photon_rate < 0:
            raise ValueError("dead_time and photon_rate must be nonnegative")


@dataclass(frozen=True)
class RampProtocol:
    """Repeated bias-current ramps recording one switching current per trial."""

    ramp_rate: float   # dI/dt [A/s]
    i_start: float     # [A]
    i_stop: float      # [A]
    n_trials: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ramp_rate <= 0:
            raise ValueError("ramp rate must be positive")
        if not self.i_start < self.i_stop:
            raise ValueError("need i_start < i_stop")
        if self.n_trials < 1:
            raise ValueError("need at least one trial")


@dataclass(frozen=True)
class PulseProtocol:
    """Pulsed-laser protocol with a short bias window per pulse cycle.

    The bias turns on ``bias_on_lead`` before the laser pulse and off
    ``bias_off_lag`` after the pulse starts, so the dark-count exposure per
    cycle is ``bias_on_lead + bias_off_lag`` (700 us with the defaults).
    """

    p_pulse: float             # pulse power [W]
    t_pulse: float             # pulse duration [s]
    i_b: float                 # bias current [A]
    n_pulses: int
    rep_rate: float = 1.0      # [Hz]
    bias_on_lead: float = 500e-6
    bias_off_lag: float = 200e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.p_pulse, self.t_pulse, self.i_b) <= 0:
            raise ValueError("pulse power, duration and bias must be positive")
        if self.n_pulses < 1:
            raise ValueError("need at least one pulse")
        if self.t_pulse > self.bias_off_lag:
            raise ValueError("pulse must end before the bias turns off")
        if self.rep_rate <= 0 or 1.0 / self.rep_rate <= self.bias_window:
            raise ValueError("repetition period must exceed the bias window")

    @property
    def bias_window(self) -> float:
        return self.bias_on_lead + self.bias_off_lag


@dataclass(frozen=True)
class EventTrace:
    """Timestamped switching events with protocol metadata.

    ``kinds`` holds 'dark' or 'photon' per event.  Times are strictly
    increasing, lie inside the protocol duration, and respect dead time.
    """

    times: np.ndarray
    kinds: np.ndarray
    duration: float
    seed: int
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        kinds = np.asarray(self.kinds)
        if times.shape != kinds.shape:
            raise ValueError("times and kinds must align")
        if times.size and (np.any(np.diff(times) <= 0)):
            raise ValueError("event times must be strictly increasing")
        if times.size and (times[0] < 0 or times[-1] > self.duration):
            raise ValueError("event times must lie within the protocol duration")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "kinds", kinds)


def _apply_dead_time(times: np.ndarray, kinds: np.ndarray, dead_time: float):
    """Non-paralyzable dead time: drop events within the window after a kept one."""
    if dead_time == 0.0 or times.size == 0:
        return times, kinds
    keep = np.zeros(times.size, dtype=bool)
    t_open = -math.inf
    for i, t in enumerate(times):
        if t >= t_open:
            keep[i] = True
            t_open = t + dead_time
    return times[keep], kinds[keep]


def simulate_cw(
    protocol: CWProtocol, junction: JunctionParams, light: LightModelParams
) -> EventTrace:
    """Simulate CW counting: dark Poisson events plus converted photons.

    Dark switches arrive as a homogeneous Poisson process at the dark rate;
    photons arrive at ``protocol.photon_rate`` and convert independently
    with probability ``escape_probability(Gamma_light, dt1)`` times the
    retrapping survival factor.  Deterministic given the seed.
    """
    gamma = protocol.i_b / junction.i_c
    if gamma >= 1.0:
        raise ValueError("bias at or above the critical current")
    dark_rate = escape.rate_dark(gamma, junction)
    parts = escape.rate_light_breakdown(np.array([gamma]), junction, light)
    p_convert = escape.escape_probability(
        escape.rate_escape_light(gamma, junction, light.t_star), light.dt1
    ) * float(parts["retrap_factor"][0])

    rng_dark = substream(protocol.seed, 0)
    rng_photon = substream(protocol.seed, 1)
    rng_convert = substream(protocol.seed, 2)

    n_dark = rng_dark.poisson(dark_rate * protocol.duration)
    t_dark = np.sort(rng_dark.uniform(0.0, protocol.duration, size=n_dark))
    n_phot = rng_photon.poisson(protocol.photon_rate * protocol.duration)
    t_phot = np.sort(rng_photon.uniform(0.0, protocol.duration, size=n_phot))
    converted = rng_convert.uniform(size=n_phot) < p_convert
    t_phot = t_phot[converted]

    times = np.concatenate([t_dark, t_phot])
    kinds = np.concatenate([
        np.full(t_dark.size, "dark"),
        np.full(t_phot.size, "photon"),
    ])
    order = np.argsort(times, kind="stable")
    times, kinds = times[order], kinds[order]
    uniq = np.ones(times.size, dtype=bool)
    uniq[1:] = np.diff(times) > 0
    times, kinds = times[uniq], kinds[uniq]
    times, kinds = _apply_dead_time(times, kinds, protocol.dead_time)
    meta = {
        "protocol": "cw",
        "i_b": protocol.i_b,
        "photon_rate": protocol.photon_rate,
        "dead_time": protocol.dead_time,
        "dark_rate_model": dark_rate,
        "p_convert_model": p_convert,
        "retrap_clamped": bool(parts["retrap_clamped"][0]),
    }
    return EventTrace(times=times, kinds=kinds, duration=protocol.duration,
                      seed=protocol.seed, meta=meta)


def switching_density_from_rate(i_grid: np.ndarray, rates: np.ndarray, ramp_rate: float):
    """Forward model of the switching-current distribution on a ramp.

    p(I) = Gamma(I)/ (dI/dt) * exp(-int_{I0}^{I} Gamma / (dI/dt) dI'),
    returned on ``i_grid`` together with the survival function.  The density
    integrates to at most one; the deficit is the no-switch probability.
    """
    i_grid = np.asarray(i_grid, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if i_grid.shape != rates.shape or i_grid.ndim != 1:
        raise ValueError("grid and rates must be aligned 1D arrays")
    if ramp_rate <= 0:
        raise ValueError("ramp rate must be positive")
    hazard = rates / ramp_rate
    finite = np.isfinite(hazard)
    h = np.where(finite, hazard, 0.0)
    cum = np.concatenate(([0.0], np.cumsum((h[1:] + h[:-1]) / 2.0 * np.diff(i_grid))))
    # an infinite rate (gamma >= 1) forces certain switching from there on
    if np.any(~finite):
        first = np.argmax(~finite)
        cum[first:] = np.inf
    survival = np.exp(-cum)
    density = np.where(finite, hazard, np.inf) * survival
    density = np.where(survival > 0, density, 0.0)
    return density, survival


def sample_switching_currents(
    i_grid: np.ndarray,
    rates: np.ndarray,
    ramp_rate: float,
    n_trials: int,
    seed: int,
    n_workers: int = 1,
) -> np.ndarray:
    """Inverse-CDF sampling of switching currents, one Philox stream per trial.

    Trials whose uniform draw exceeds the total switching probability get
    NaN (the ramp completed without a switch).
    """
    _, survival = switching_density_from_rate(i_grid, rates, ramp_rate)
    cdf = 1.0 - survival

    def one(trial: int) -> float:
        u = substream(seed, RAMP_STREAM_BASE + trial).uniform()
        if u > cdf[-1]:
            return math.nan
        return float(np.interp(u, cdf, i_grid))

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return np.array(list(pool.map(one, range(n_trials))))
    return np.array([one(k) for k in range(n_trials)])


def simulate_ramp(
    protocol: RampProtocol,
    junction: JunctionParams,
    light: LightModelParams | None = None,
    n_workers: int = 1,
    grid_points: int = 10_000,
) -> np.ndarray:
    """Sample switching currents for repeated ramps of the bias current.

    The escape rate on the grid is the dark rate, or the full measured-rate
    model when ``light`` is given.  Grid step is at most
    (i_stop - i_start) / 10^4.
    """
    n = max(grid_points, 2)
    i_grid = np.linspace(protocol.i_start, protocol.i_stop, n + 1)
    gamma = i_grid / junction.i_c
    if light is None:
        rates = np.asarray(escape.rate_dark(gamma, junction))
    else:
        rates = np.asarray(escape.rate_light_measured(gamma, junction, light))
    return sample_switching_currents(
        i_grid, rates, protocol.ramp_rate, protocol.n_trials, protocol.seed, n_workers
    )


@dataclass(frozen=True)
class PulseResult:
    """Per-pulse outcomes and summary statistics."""

    switched: np.ndarray          # bool per pulse
    n_pulse: float                # mean photons per pulse
    p_convert: float              # per-photon conversion probability
    p_dark_window: float          # dark switch probability per bias window
    seed: int

    @property
    def p_switch(self) -> float:
        return float(np.mean(self.switched))

    @property
    def stderr(self) -> float:
        """sqrt(counts)/n_pulses, the Poisson error bar on p_switch."""
        n = self.switched.size
        return float(math.sqrt(max(int(np.sum(self.switched)), 1)) / n)


def simulate_pulse(
    protocol: PulseProtocol,
    junction: JunctionParams,
    light: LightModelParams,
    rate_per_power: float,
) -> PulseResult:
    """Simulate pulsed detection: Poisson photons per pulse plus window darks.

    ``rate_per_power`` is the absorbed photon rate per unit laser power
    [Hz/W], so the mean photon number per pulse is
    N = rate_per_power * P * t.  A pulse switches if any photon converts or
    a dark escape falls in the bias window.
    """
    if rate_per_power <= 0:
        raise ValueError("rate_per_power must be positive")
    gamma = protocol.i_b / junction.i_c
    if gamma >= 1.0:
        raise ValueError("bias at or above the critical current")
    n_pulse = rate_per_power * protocol.p_pulse * protocol.t_pulse
    parts = escape.rate_light_breakdown(np.array([gamma]), junction, light)
    p_convert = escape.escape_probability(
        escape.rate_escape_light(gamma, junction, light.t_star), light.dt1
    ) * float(parts["retrap_factor"][0])
    dark_rate = escape.rate_dark(gamma, junction)
    p_dark = escape.escape_probability(dark_rate, protocol.bias_window)

    switched = np.empty(protocol.n_pulses, dtype=bool)
    for k in range(protocol.n_pulses):
        rng = substream(protocol.seed, PULSE_STREAM_BASE + k)
        n_photons = rng.poisson(n_pulse)
        hit = bool(np.any(rng.uniform(size=n_photons) < p_convert)) if n_photons else False
        dark = bool(rng.uniform() < p_dark)
        switched[k] = hit or dark
    return PulseResult(
        switched=switched,
        n_pulse=n_pulse,
        p_convert=p_convert,
        p_dark_window=p_dark,
        seed=protocol.seed,
    )


def bin_counts(trace: EventTrace, bin_width: float) -> np.ndarray:
    """Counts of events in consecutive bins of ``bin_width`` seconds."""
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    n_bins = int(math.ceil(trace.duration / bin_width))
    edges = np.arange(n_bins + 1) * bin_width
    counts, _ = np.histogram(trace.times, bins=edges)
    return counts
