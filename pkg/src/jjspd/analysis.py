"""Counting statistics and the switching-distribution to escape-rate transform.

All functions operate on plain arrays, so simulated and recorded data go
through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "CountHistogram",
    "LinearityFit",
    "poisson_fit",
    "variance_mean_test",
    "linearity_fit",
    "fd_transform",
    "distribution_shape_stats",
]


@dataclass(frozen=True)
class CountHistogram:
    """Poisson summary of binned counts."""

    counts: np.ndarray
    bin_width: float
    total_duration: float
    mean: float        # fitted Poisson mean (MLE = sample mean)
    variance: float    # sample variance of the counts


@dataclass(frozen=True)
class LinearityFit:
    """Weighted straight-line fit of switching probability vs <N_photon>."""

    slope: float
    offset: float
    slope_err: float
    offset_err: float
    sigma: np.ndarray            # per-point standard deviations used as weights
    residual_norm: float         # weighted residual norm (chi^2)
    reduced_chi2: float


def poisson_fit(counts, k_max: int | None = None) -> tuple[float, float, np.ndarray]:
    """Poisson MLE of binned counts.

    Returns the fitted mean (= sample mean), the sample variance, and the
    predicted probabilities P(k) for k = 0 .. max(counts) (or ``k_max``).
    """
    counts = np.asarray(counts)
    if counts.size < 1:
        raise ValueError("need at least one bin")
    if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
        raise ValueError("counts must be nonnegative integers")
    mu = float(np.mean(counts))
    var = float(np.var(counts)) if counts.size > 1 else 0.0
    top = int(counts.max()) if k_max is None else max(int(counts.max()), k_max)
    ks = np.arange(top + 1)
    pmf = stats.poisson.pmf(ks, mu) if mu > 0 else (ks == 0).astype(float)
    return mu, var, pmf


def variance_mean_test(counts, confidence: float = 0.95):
    """Variance-to-mean (Fano) ratio with a dispersion-test interval.

    Under the Poisson hypothesis (n-1) s^2 / mean follows chi^2 with n-1
    degrees of freedom; the returned interval contains the ratio with the
    given confidence when the data is Poissonian.  The flag marks the data
    'sub' or 'super' Poissonian when the ratio leaves the interval.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.size
    if n < 30:
        raise ValueError("need at least 30 bins for the dispersion test")
    mean = counts.mean()
    if mean == 0:
        raise ValueError("all-zero counts: ratio undefined")
    ratio = counts.var(ddof=1) / mean
    alpha = 1.0 - confidence
    lo = stats.chi2.ppf(alpha / 2.0, n - 1) / (n - 1)
    hi = stats.chi2.ppf(1.0 - alpha / 2.0, n - 1) / (n - 1)
    if ratio < lo:
        flag = "sub"
    elif ratio > hi:
        flag = "super"
    else:
        flag = "consistent"
    return ratio, (float(lo), float(hi)), flag


def linearity_fit(n_photon, probability, sigma) -> LinearityFit:
    """Weighted least-squares line through (⟨N⟩, switching probability).

    Weights are 1/sigma.  The slope estimates the per-photon detection
    probability; the offset is the dark contribution.
    """
    x = np.asarray(n_photon, dtype=float)
    y = np.asarray(probability, dtype=float)
    s = np.asarray(sigma, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(s <= 0):
        raise ValueError("sigma must be positive")
    if x.shape != y.shape or x.shape != s.shape:
        raise ValueError("inputs must align")
    w = 1.0 / s**2
    sw, swx, swy = w.sum(), (w * x).sum(), (w * y).sum()
    swxx, swxy = (w * x * x).sum(), (w * x * y).sum()
    delta = sw * swxx - swx**2
    if delta <= 0 or not np.isfinite(delta):
        raise ValueError("singular design: bias values do not span a line")
    slope = (sw * swxy - swx * swy) / delta
    offset = (swxx * swy - swx * swxy) / delta
    slope_err = np.sqrt(sw / delta)
    offset_err = np.sqrt(swxx / delta)
    resid = (y - offset - slope * x) / s
    chi2 = float(np.sum(resid**2))
    dof = max(x.size - 2, 1)
    return LinearityFit(
        slope=float(slope),
        offset=float(offset),
        slope_err=float(slope_err),
        offset_err=float(offset_err),
        sigma=s,
        residual_norm=chi2,
        reduced_chi2=chi2 / dof,
    )


def fd_transform(
    samples,
    ramp_rate: float,
    n_bins: int = 200,
    bin_range: tuple[float, float] | None = None,
):
    """Escape rate versus current from switching-current samples.

    Bins the samples, forms the survival sums S_k = sum_{j >= k} P_j and
    returns bin centers with

        Gamma(I_k) = (dI/dt / dI_bin) * ln(S_k / S_{k+1}).

    Bins beyond the last occupied survival bin are dropped (their log is
    undefined); NaN samples (no-switch trials) are ignored.
    """
    samples = np.asarray(samples, dtype=float)
    samples = samples[np.isfinite(samples)]
    if ramp_rate <= 0:
        raise ValueError("ramp rate must be positive")
    if samples.size < 2:
        raise ValueError("need at least two switching events")
    counts, edges = np.histogram(samples, bins=n_bins, range=bin_range)
    if np.count_nonzero(counts) < 2:
        raise ValueError("need at least two occupied bins")
    width = edges[1] - edges[0]
    centers = (edges[:-1] + edges[1:]) / 2.0
    survival = np.cumsum(counts[::-1])[::-1].astype(float)
    # valid while both the bin's own tail and the following tail are occupied
    valid = (survival[:-1] > 0) & (survival[1:] > 0)
    with np.errstate(divide="ignore"):
        rate = ramp_rate / width * np.log(survival[:-1] / survival[1:])
    return centers[:-1][valid], rate[valid]


def distribution_shape_stats(samples) -> tuple[float, float, float]:
    """Mean, sample std and bias-corrected skewness of switching currents."""
    samples = np.asarray(samples, dtype=float)
    samples = samples[np.isfinite(samples)]
    if samples.size < 100:
        raise ValueError("need at least 100 samples for shape statistics")
    mean = float(np.mean(samples))
    std = float(np.std(samples, ddof=1))
    skew = float(stats.skew(samples, bias=False))
    return mean, std, skew
