"""Quasiparticle channel: photon-generated QPs, diffusion, shot noise, T*.

An absorbed photon of energy E breaks Cooper pairs into N = eta E / Delta
quasiparticles.  QPs diffusing from a point source at distance x reach the
junction as a transient current; its shot noise couples to the phase
particle like a bath at an effective temperature

    T* = hbar omega_p / (kB * 2 acoth(1 + Q S_I / (hbar omega_p^2 C_JJ)))

The per-QP diffusion flux implemented here is the dimensionally consistent
1D form

    I(x, t) = e x / (4 t sqrt(pi D t)) * exp(-x^2 / (4 D t))

whose time integral is exactly e/2 (half of the charge crosses the plane at
x).  The variant without the 1/t factor, which has units of charge, is kept
under a legacy name for documentation parity only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

__all__ = [
    "QPModelParams",
    "qp_count",
    "diffusion_current",
    "diffusion_charge_printed",
    "diffusion_peak_time",
    "qp_shot_noise",
    "effective_temperature",
    "tstar_model_valid",
]

_E = const.e
_HBAR = const.hbar
_KB = const.k


@dataclass(frozen=True)
class QPModelParams:
    """Inputs of the quasiparticle noise model.

    eta: downconversion efficiency; gap: superconductor gap energy [J];
    diffusion: QP diffusion constant in the contact [m^2/s]; fano: Fano
    factor of the diffusion-current shot noise; x: source distance from the
    junction [m].
    """

    eta: float = 0.57
    gap: float = 1.52e-3 * _E
    diffusion: float = 0.55e-4
    fano: float = 1.0
    x: float = 100e-9

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.gap <= 0 or self.diffusion <= 0 or self.x <= 0:
            raise ValueError("gap, diffusion and x must be positive")
        if self.fano <= 0:
            raise ValueError("fano must be positive")


def qp_count(e_photon: float, gap: float, eta: float) -> float:
    """Quasiparticles generated per photon, N = eta E / Delta (not rounded)."""
    if e_photon <= 0 or gap <= 0 or eta <= 0:
        raise ValueError("all inputs must be positive")
    return eta * e_photon / gap


def diffusion_current(x: float, t, diffusion: float):
    """Per-QP diffusion current at distance x and time t [A].

    Corrected 1D diffusion flux; t = 0 returns the limit 0.
    """
    if x <= 0 or diffusion <= 0:
        raise ValueError("x and diffusion must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            t > 0,
            _E * x / (4.0 * t * np.sqrt(math.pi * diffusion * t))
            * np.exp(-(x**2) / (4.0 * diffusion * t)),
            0.0,
        )
    return out if out.ndim else float(out)


def diffusion_charge_printed(x: float, t, diffusion: float):
    """Legacy form (e / (4 sqrt(pi D t))) x exp(-x^2/(4 D t)).

    Dimensionally a charge, not a current; exposed only to mirror the
    published expression.  Use :func:`diffusion_current` for physics.
    """
    if x <= 0 or diffusion <= 0:
        raise ValueError("x and diffusion must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            t > 0,
            _E / (4.0 * np.sqrt(math.pi * diffusion * t)) * x
            * np.exp(-(x**2) / (4.0 * diffusion * t)),
            0.0,
        )
    return out if out.ndim else float(out)


def diffusion_peak_time(x: float, diffusion: float) -> float:
    """Time of maximum diffusion current, t* = x^2 / (6 D) [s]."""
    if x <= 0 or diffusion <= 0:
        raise ValueError("x and diffusion must be positive")
    return x**2 / (6.0 * diffusion)


def qp_shot_noise(fano: float, i_diff) -> float:
    """Shot-noise spectral density S_I = 2 e F I [A^2/Hz]."""
    if fano < 0:
        raise ValueError("fano must be nonnegative")
    i_diff = np.asarray(i_diff, dtype=float)
    if np.any(i_diff < 0):
        raise ValueError("current must be nonnegative")
    out = 2.0 * _E * fano * i_diff
    return out if out.ndim else float(out)


def effective_temperature(s_i: float, omega_p: float, q: float, c_jj: float) -> float:
    """Effective escape temperature from current noise [K].

    T* = hbar omega_p / (kB * 2 acoth(1 + Q S_I / (hbar omega_p^2 C_JJ))).
    Requires S_I > 0 (acoth is undefined at argument 1).
    """
    if s_i <= 0:
        raise ValueError("noise density must be positive (acoth undefined at 1)")
    if omega_p <= 0 or q <= 0 or c_jj <= 0:
        raise ValueError("omega_p, Q and C_JJ must be positive")
    eps = q * s_i / (_HBAR * omega_p**2 * c_jj)
    # acoth(1 + eps) = 0.5 ln((2 + eps) / eps)
    acoth = 0.5 * math.log((2.0 + eps) / eps)
    return _HBAR * omega_p / (_KB * 2.0 * acoth)


def tstar_model_valid(x: float, diffusion: float, omega_p: float) -> bool:
    """Whether the T* mapping applies: the QP transient must outlast 1/omega_p.

    Returns False (out-of-model) when the characteristic diffusion time
    x^2/D is shorter than the plasma period scale 1/omega_p.
    """
    if x <= 0 or diffusion <= 0 or omega_p <= 0:
        raise ValueError("all inputs must be positive")
    return x**2 / diffusion >= 1.0 / omega_p
