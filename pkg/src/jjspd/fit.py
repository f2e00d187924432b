"""Parameter estimation from escape-rate curves.

Objective
---------
All fits minimize weighted squared residuals in log-rate space,

    chi^2 = sum_i [ (ln Gamma_model(I_i) - ln Gamma_i) / sigma_i ]^2,

with sigma_i = 1/sqrt(counts_i) from Poisson counting statistics (unit
weights when counts are unavailable).  Rates spanning many decades make the
log-space objective the natural choice.

Optimizer: bounded trust-region least squares (scipy ``least_squares`` with
the ``trf`` method and finite-difference gradients), relative objective
tolerance 1e-8.  Fits are deterministic given the data; initial points are
derived from the data:

- dark fit: I_c starts at max(I_b)/0.92 (the measured window typically ends
  near gamma ~ 0.92);
- light fits: T* starts from the semilog slope via
  d(dU)/d(I_b) = -2 E_J0 arccos(gamma) / I_c, then dt1 from the mid-window
  amplitude; I_r0 starts at 0.7 I_c.

Parameter bounds: T* in (T0, 20 K], dt1 in (0, 100 ns], I_r0 in (0, I_c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import constants as const
from scipy.optimize import least_squares

from . import escape
from .escape import LightModelParams
from .junction import JunctionParams, with_critical_current

__all__ = [
    "RateData",
    "FitResult",
    "fit_dark",
    "fit_light",
    "fit_light_retrap",
    "fit_gate_joint",
    "heating_correction",
]

_KB = const.k

T_STAR_MAX = 20.0       # [K]
DT1_MAX = 100e-9        # [s]
_FTOL = 1e-8
_RATE_FLOOR = escape.FLUSH_RATE


@dataclass(frozen=True)
class RateData:
    """One measured (or synthetic) rate curve.

    ``counts`` are the number of events behind each rate point and set the
    log-space weights; ``photon_rate`` is the absorbed photon rate of the
    illumination that produced the curve (0 for dark data).
    """

    i_b: np.ndarray
    rate: np.ndarray
    counts: np.ndarray | None = None
    photon_rate: float = 0.0

    def __post_init__(self) -> None:
        i_b = np.asarray(self.i_b, dtype=float)
        rate = np.asarray(self.rate, dtype=float)
        if i_b.shape != rate.shape or i_b.ndim != 1:
            raise ValueError("i_b and rate must be aligned 1D arrays")
        if np.any(rate <= 0):
            raise ValueError("rates must be positive (drop empty points upstream)")
        object.__setattr__(self, "i_b", i_b)
        object.__setattr__(self, "rate", rate)
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=float)
            if counts.shape != i_b.shape or np.any(counts <= 0):
                raise ValueError("counts must align with i_b and be positive")
            object.__setattr__(self, "counts", counts)

    @property
    def sigma_log(self) -> np.ndarray:
        if self.counts is None:
            return np.ones_like(self.rate)
        return 1.0 / np.sqrt(self.counts)


@dataclass(frozen=True)
class FitResult:
    """Estimated parameters with curvature-based uncertainties."""

    names: tuple[str, ...]
    values: dict[str, float]
    stderr: dict[str, float]
    bounds: dict[str, tuple[float, float]]
    residual_norm: float
    converged: bool
    n_iterations: int
    flags: tuple[str, ...] = ()
    meta: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def _log_residuals(model_rate: np.ndarray, data: RateData) -> np.ndarray:
    model = np.maximum(np.asarray(model_rate, dtype=float), _RATE_FLOOR)
    return (np.log(model) - np.log(data.rate)) / data.sigma_log


def _curvature_errors(jac: np.ndarray, names: Sequence[str]):
    """Standard errors from the Gauss-Newton curvature; flags degeneracy."""
    flags: list[str] = []
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj)
        flags.append("degenerate")
    diag = np.diag(cov).copy()
    if np.any(diag < 0) or np.linalg.cond(jtj) > 1e12:
        flags.append("degenerate")
        diag = np.abs(diag)
    err = {n: float(math.sqrt(d)) for n, d in zip(names, diag)}
    return err, flags


def _run_fit(residual_fn, x0, lower, upper, names) -> FitResult:
    """Bounded least squares on log-transformed parameters.

    All fit parameters here are positive scale parameters spanning decades
    (currents ~1e-5, times ~1e-9, temperatures ~1); optimizing their
    logarithms keeps the trust region well conditioned.
    """
    x0 = np.asarray(x0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    res = least_squares(
        lambda y: residual_fn(np.exp(y)),
        x0=np.log(np.clip(x0, lower, upper)),
        bounds=(np.log(lower), np.log(upper)),
        method="trf",
        ftol=_FTOL,
        xtol=1e-12,
        gtol=1e-14,
    )
    x = np.exp(res.x)
    stderr_log, flags = _curvature_errors(res.jac, names)
    # delta method: sigma_x = x * sigma_(ln x)
    stderr = {n: float(x[i] * stderr_log[n]) for i, n in enumerate(names)}
    values = {n: float(v) for n, v in zip(names, x)}
    bounds = {n: (float(lo), float(hi)) for n, lo, hi in zip(names, lower, upper)}
    converged = bool(res.success) and np.isfinite(res.cost)
    if not converged:
        flags = list(flags) + ["not_converged"]
    return FitResult(
        names=tuple(names),
        values=values,
        stderr=stderr,
        bounds=bounds,
        residual_norm=float(2.0 * res.cost),
        converged=converged,
        n_iterations=int(res.nfev),
        flags=tuple(flags),
        meta={"status": int(res.status), "message": str(res.message)},
    )


# ---------------------------------------------------------------------------
# dark fit
# ---------------------------------------------------------------------------

def fit_dark(data: RateData, junction: JunctionParams, t0: float | None = None) -> FitResult:
    """Fit the critical current to a dark rate curve.

    The only free parameter is I_c; E_J0, omega_p0 and Q0 are recomputed
    from the fitted value (C_JJ stays fixed).  Requires at least 5 points
    spanning two decades of rate.
    """
    if data.i_b.size < 5:
        raise ValueError("need at least 5 dark points")
    if np.log10(data.rate.max() / data.rate.min()) < 2.0:
        raise ValueError("dark data must span at least two decades of rate")
    t0 = junction.t_base if t0 is None else t0
    i_max = float(data.i_b.max())

    def residual(x):
        jj = with_critical_current(junction, x[0])
        model = escape.rate_dark(data.i_b / x[0], jj, t0)
        return _log_residuals(model, data)

    x0 = [i_max / 0.92]
    result = _run_fit(residual, x0, [i_max * (1.0 + 1e-9)], [i_max * 1.8], ["i_c"])
    fitted = with_critical_current(junction, result["i_c"])
    result.meta.update(
        e_j0=fitted.e_j0, omega_p0=fitted.omega_p0, q0=fitted.q0, t0=t0
    )
    return result


# ---------------------------------------------------------------------------
# light fits
# ---------------------------------------------------------------------------

def _light_params(x, photon_rate, i_r0=None, retrap_temperature=None) -> LightModelParams:
    return LightModelParams(
        t_star=x[0],
        dt1=x[1],
        photon_rate=photon_rate,
        i_r0=i_r0,
        retrap_temperature=retrap_temperature,
    )


def _initial_light_guess(datasets: Sequence[RateData], junction: JunctionParams):
    """(T*, dt1) starting point from the slope and level of the first curve.

    Uses the upper half of the bias window, which is free of the low-bias
    retrapping rolloff.
    """
    data = datasets[0]
    order = np.argsort(data.i_b)
    i_b = data.i_b[order]
    rate = data.rate[order]
    half = max(i_b.size // 2, 2)
    i_b, rate = i_b[-half:], rate[-half:]
    slope = np.polyfit(i_b, np.log(rate), 1)[0]
    mid = i_b.size // 2
    gamma_mid = float(i_b[mid]) / junction.i_c
    t_star = 2.0 * junction.e_j0 * math.acos(min(gamma_mid, 1.0)) / (
        _KB * abs(slope) * junction.i_c
    )
    t_star = float(np.clip(t_star, junction.t_base * 1.5, T_STAR_MAX))
    esc_mid = escape.rate_escape_light(gamma_mid, junction, t_star)
    level = float(rate[mid])
    dt1 = level / (esc_mid * data.photon_rate) if esc_mid > 0 and data.photon_rate > 0 else 1e-9
    dt1 = float(np.clip(dt1, 1e-12, DT1_MAX))
    return t_star, dt1


def _upper_window(data: RateData, fraction: float = 0.45) -> RateData:
    """The high-bias part of a curve, clear of the retrapping rolloff."""
    order = np.argsort(data.i_b)
    n = max(int(math.ceil(data.i_b.size * fraction)), 3)
    idx = order[-n:]
    return RateData(
        i_b=data.i_b[idx],
        rate=data.rate[idx],
        counts=None if data.counts is None else data.counts[idx],
        photon_rate=data.photon_rate,
    )


def fit_light(
    datasets: Sequence[RateData], junction: JunctionParams
) -> FitResult:
    """Fit (T*, dt1) of the two-parameter light model (no retrapping).

    ``datasets`` holds one or more illuminated curves, each carrying its own
    absorbed photon rate; the dark-fitted junction provides I_c.
    """
    datasets = [d for d in datasets]
    if not datasets or any(d.photon_rate <= 0 for d in datasets):
        raise ValueError("every light dataset needs a positive photon rate")

    def residual(x):
        parts = []
        for d in datasets:
            light = _light_params(x, d.photon_rate)
            model = escape.rate_light_measured(d.i_b / junction.i_c, junction, light)
            parts.append(_log_residuals(model, d))
        return np.concatenate(parts)

    t_star0, dt10 = _initial_light_guess(datasets, junction)
    lower = [junction.t_base * (1.0 + 1e-9), 1e-13]
    upper = [T_STAR_MAX, DT1_MAX]
    return _run_fit(residual, [t_star0, dt10], lower, upper, ["t_star", "dt1"])


def fit_light_retrap(
    datasets: Sequence[RateData],
    junction: JunctionParams,
    retrap_temperature: float | None = None,
    mean_retrap_current: float | None = None,
) -> FitResult:
    """Fit (T*, dt1, I_r0) of the light model with the retrapping correction.

    The data must extend into the low-bias rollover region, otherwise I_r0
    is unconstrained.  ``retrap_temperature`` configures the temperature of
    the retrapping rate (None evaluates it at the fitted T*).  When the
    measured mean retrapping current is supplied, the result's meta reports
    the <I_r>/I_r0 diagnostic.
    """
    datasets = [d for d in datasets]
    if not datasets or any(d.photon_rate <= 0 for d in datasets):
        raise ValueError("every light dataset needs a positive photon rate")

    def residual(x):
        parts = []
        for d in datasets:
            light = _light_params(
                x, d.photon_rate, i_r0=x[2], retrap_temperature=retrap_temperature
            )
            model = escape.rate_light_measured(d.i_b / junction.i_c, junction, light)
            parts.append(_log_residuals(model, d))
        return np.concatenate(parts)

    # stage the start: (T*, dt1) from a rolloff-free pre-fit on the upper
    # window, then a coarse scan locates the I_r0 basin before polishing
    pre = fit_light([_upper_window(d) for d in datasets], junction)
    t_star0, dt10 = pre["t_star"], pre["dt1"]
    i_r0_grid = np.linspace(0.3, 0.95, 27) * junction.i_c
    costs = [float(np.sum(residual([t_star0, dt10, ir]) ** 2)) for ir in i_r0_grid]
    i_r0_start = float(i_r0_grid[int(np.argmin(costs))])
    lower = [junction.t_base * (1.0 + 1e-9), 1e-13, junction.i_c * 1e-3]
    upper = [T_STAR_MAX, DT1_MAX, junction.i_c * (1.0 - 1e-9)]
    result = _run_fit(
        residual,
        [t_star0, dt10, i_r0_start],
        lower,
        upper,
        ["t_star", "dt1", "i_r0"],
    )
    flags = list(result.flags)
    i_r0 = result["i_r0"]
    span = upper[2] - lower[2]
    if i_r0 - lower[2] < 1e-3 * span or upper[2] - i_r0 < 1e-3 * span:
        flags.append("i_r0_at_bound")
    meta = dict(result.meta)
    meta["retrap_temperature"] = retrap_temperature
    if mean_retrap_current is not None:
        meta["mean_retrap_over_i_r0"] = float(mean_retrap_current / i_r0)
    return FitResult(
        names=result.names,
        values=result.values,
        stderr=result.stderr,
        bounds=result.bounds,
        residual_norm=result.residual_norm,
        converged=result.converged,
        n_iterations=result.n_iterations,
        flags=tuple(flags),
        meta=meta,
    )


def fit_gate_joint(
    gate_sets: Sequence[tuple[JunctionParams, Sequence[RateData]]],
) -> FitResult:
    """Joint fit of shared (T*, dt1) across gate voltages.

    Each entry pairs the gate's junction parameters (I_c fixed from its own
    dark fit) with that gate's illuminated curves.  A single-gate call
    reduces exactly to :func:`fit_light`.
    """
    if not gate_sets:
        raise ValueError("need at least one gate")
    for jj, datasets in gate_sets:
        if not datasets or any(d.photon_rate <= 0 for d in datasets):
            raise ValueError("every gate needs light datasets with photon rates")

    def residual(x):
        parts = []
        for jj, datasets in gate_sets:
            for d in datasets:
                light = _light_params(x, d.photon_rate)
                model = escape.rate_light_measured(d.i_b / jj.i_c, jj, light)
                parts.append(_log_residuals(model, d))
        return np.concatenate(parts)

    jj0, datasets0 = gate_sets[0]
    t_star0, dt10 = _initial_light_guess(datasets0, jj0)
    t_base = max(jj.t_base for jj, _ in gate_sets)
    lower = [t_base * (1.0 + 1e-9), 1e-13]
    upper = [T_STAR_MAX, DT1_MAX]
    result = _run_fit(residual, [t_star0, dt10], lower, upper, ["t_star", "dt1"])
    result.meta["n_gates"] = len(gate_sets)
    return result


# ---------------------------------------------------------------------------
# heating correction
# ---------------------------------------------------------------------------

def heating_correction(
    power_datasets: Sequence[tuple[float, RateData]],
    junction: JunctionParams,
    light_template: LightModelParams,
) -> dict[float, float]:
    """Per-power multiplicative I_c scale factors for substrate heating.

    For each laser power (ascending) the factor s in [0.99, 1] minimizes the
    light-model residuals with I_c -> s I_c; monotonicity is enforced by
    bounding each fit above by the previous factor.  A required reduction
    beyond 1 % flags the result as out-of-model.

    Returns
    -------
    dict
        power -> factor, in ascending power order.

    Raises
    ------
    ValueError
        If the best factor falls below 0.99 (out-of-model heating).
    """
    factors: dict[float, float] = {}
    upper = 1.0
    for power, data in sorted(power_datasets, key=lambda pd: pd[0]):
        if data.photon_rate <= 0:
            raise ValueError("heating datasets need positive photon rates")

        def residual(x):
            jj = with_critical_current(junction, x[0] * junction.i_c)
            light = LightModelParams(
                t_star=light_template.t_star,
                dt1=light_template.dt1,
                photon_rate=data.photon_rate,
                i_r0=light_template.i_r0,
                retrap_temperature=light_template.retrap_temperature,
            )
            model = escape.rate_light_measured(data.i_b / jj.i_c, jj, light)
            return _log_residuals(model, data)

        res = least_squares(
            residual,
            x0=[upper],
            bounds=([0.985], [upper]),
            method="trf",
            ftol=_FTOL,
        )
        factor = float(res.x[0])
        if factor < 0.99:
            raise ValueError(
                f"power {power:.3g} W requires an I_c reduction beyond 1 % "
                f"(factor {factor:.4f}); out of the heating-correction model"
            )
        factors[power] = factor
        upper = factor
    return factors
