"""Device description and derived Josephson-junction parameters.

All quantities are stored in strict SI units (A, F, J, m, K, rad/s).
Human units (uA, fF, meV, GHz, ...) appear only when loading device files
and when formatting reports.

The derivation chain for a diffusive graphene junction is

    l_mfp = (hbar/e) * mu * sqrt(pi * n)        2D Drude mean free path
    D_e   = v_F * l_mfp / 2                     diffusion constant
    E_Th  = hbar * D_e / L**2                   Thouless energy
    C_JJ  = hbar / (R_n * E_Th)                 effective capacitance
    omega_p0 = sqrt(2 e I_c / (hbar C_JJ))      zero-bias plasma frequency
    Q0    = omega_p0 * R_n * C_JJ               quality factor
    E_J0  = hbar * I_c / (2 e)                  Josephson coupling energy

The Thouless length L is the lithographic design length, not the shorter
measured channel length; both are kept on the device record.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from scipy import constants as const

from .errors import ConfigError

__all__ = [
    "DeviceConfig",
    "JunctionParams",
    "derive_mean_free_path",
    "derive_diffusion_and_thouless",
    "derive_capacitance",
    "derive_plasma_and_quality",
    "junction_from_device",
    "with_critical_current",
    "load_devices",
    "format_report",
]

_E = const.e
_HBAR = const.hbar

#: Default Fermi velocity in graphene [m/s], overridable per device.
DEFAULT_FERMI_VELOCITY = 1.0e6


@dataclass(frozen=True)
class DeviceConfig:
    """Measured description of one device, in SI units.

    Attributes
    ----------
    name : str
        Device identifier.
    width : float
        Junction width [m].
    channel_length_measured : float
        SEM-measured channel length [m].
    channel_length_design : float
        Lithographic design length [m]; used for the Thouless energy.
    graphene_layers : int
        Number of graphene layers.
    normal_resistance : float
        Normal-state resistance R_n [ohm].
    gap : float
        Superconducting gap energy [J].
    electron_density : float
        Areal carrier density n [1/m^2].
    mobility : float
        Electronic mobility mu [m^2/(V s)].
    fermi_velocity : float
        Fermi velocity v_F [m/s].
    v_cnp : float
        Gate voltage of the charge-neutrality point [V].
    measured_polarization_ratio : float
        Measured polarization ratio, dimensionless in [0, 1].
    base_temperature : float
        Cryostat base temperature T0 [K].
    critical_current : float or None
        Fitted critical current I_c [A], when known.
    mean_switching_current : float or None
        Measured mean switching current <I_s> [A], when known.
    """

    name: str
    width: float
    channel_length_measured: float
    channel_length_design: float
    graphene_layers: int
    normal_resistance: float
    gap: float
    electron_density: float
    mobility: float
    fermi_velocity: float
    v_cnp: float
    measured_polarization_ratio: float
    base_temperature: float
    critical_current: float | None = None
    mean_switching_current: float | None = None

    def __post_init__(self) -> None:
        positive = {
            "width": self.width,
            "channel_length_measured": self.channel_length_measured,
            "channel_length_design": self.channel_length_design,
            "graphene_layers": self.graphene_layers,
            "normal_resistance": self.normal_resistance,
            "gap": self.gap,
            "electron_density": self.electron_density,
            "mobility": self.mobility,
            "fermi_velocity": self.fermi_velocity,
            "base_temperature": self.base_temperature,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ValueError(f"device {self.name!r}: {key} must be positive, got {value}")
        if self.channel_length_design < self.channel_length_measured:
            raise ValueError(
                f"device {self.name!r}: design length shorter than measured length"
            )
        if not 0.0 <= self.measured_polarization_ratio <= 1.0:
            raise ValueError(f"device {self.name!r}: polarization ratio outside [0, 1]")


@dataclass(frozen=True)
class JunctionParams:
    """Derived junction parameters in SI units.

    The constructor helpers guarantee the exact relations
    omega_p0 = sqrt(2 e I_c / (hbar C_JJ)), Q0 = omega_p0 R_n C_JJ and
    E_J0 = hbar I_c / (2 e).
    """

    i_c: float          # critical current [A]
    r_n: float          # normal resistance [ohm]
    c_jj: float         # effective capacitance [F]
    e_j0: float         # Josephson coupling energy [J]
    omega_p0: float     # zero-bias plasma frequency [rad/s]
    q0: float           # zero-bias quality factor
    gap: float          # superconducting gap [J]
    t_base: float       # base temperature [K]
    e_thouless: float | None = None   # [J]
    d_e: float | None = None          # [m^2/s]
    l_mfp: float | None = None        # [m]

    def __post_init__(self) -> None:
        for key in ("i_c", "r_n", "c_jj", "e_j0", "omega_p0", "q0", "gap", "t_base"):
            if not getattr(self, key) > 0:
                raise ValueError(f"junction parameter {key} must be positive")


def derive_mean_free_path(electron_density: float, mobility: float) -> float:
    """Electron mean free path from carrier density and mobility.

    Uses the 2D Drude relation l = (hbar/e) * mu * sqrt(pi * n).

    Parameters
    ----------
    electron_density : float
        Areal density n [1/m^2].
    mobility : float
        Mobility mu [m^2/(V s)].

    Returns
    -------
    float
        Mean free path [m].
    """
    if electron_density <= 0 or mobility <= 0:
        raise ValueError("electron density and mobility must be positive")
    return (_HBAR / _E) * mobility * math.sqrt(math.pi * electron_density)


def derive_diffusion_and_thouless(
    l_mfp: float, fermi_velocity: float, length: float
) -> tuple[float, float]:
    """Diffusion constant D_e = v_F l / 2 and Thouless energy hbar D_e / L^2.

    Parameters
    ----------
    l_mfp : float
        Mean free path [m].
    fermi_velocity : float
        Fermi velocity [m/s].
    length : float
        Channel length used for the Thouless scale [m].

    Returns
    -------
    (float, float)
        Diffusion constant [m^2/s] and Thouless energy [J].
    """
    if l_mfp <= 0 or fermi_velocity <= 0 or length <= 0:
        raise ValueError("all inputs must be positive")
    d_e = fermi_velocity * l_mfp / 2.0
    e_th = _HBAR * d_e / length**2
    return d_e, e_th


def derive_capacitance(normal_resistance: float, e_thouless: float) -> float:
    """Effective junction capacitance C_JJ = hbar / (R_n * E_Th)."""
    if normal_resistance <= 0 or e_thouless <= 0:
        raise ValueError("resistance and Thouless energy must be positive")
    return _HBAR / (normal_resistance * e_thouless)


def derive_plasma_and_quality(
    i_c: float, c_jj: float, r_n: float
) -> tuple[float, float, float]:
    """Zero-bias plasma frequency, quality factor and coupling energy.

    Returns
    -------
    (float, float, float)
        omega_p0 [rad/s], Q0 [dimensionless], E_J0 [J].
    """
    if i_c <= 0 or c_jj <= 0 or r_n <= 0:
        raise ValueError("all inputs must be positive")
    omega_p0 = math.sqrt(2.0 * _E * i_c / (_HBAR * c_jj))
    q0 = omega_p0 * r_n * c_jj
    e_j0 = _HBAR * i_c / (2.0 * _E)
    return omega_p0, q0, e_j0


def junction_from_device(device: DeviceConfig, i_c: float | None = None) -> JunctionParams:
    """Build :class:`JunctionParams` from a device record.

    The Thouless energy uses the lithographic design length.  ``i_c``
    overrides the device's recorded critical current (e.g. with a freshly
    fitted value).
    """
    i_c = i_c if i_c is not None else device.critical_current
    if i_c is None:
        raise ValueError(f"device {device.name!r} has no critical current on record")
    l_mfp = derive_mean_free_path(device.electron_density, device.mobility)
    d_e, e_th = derive_diffusion_and_thouless(
        l_mfp, device.fermi_velocity, device.channel_length_design
    )
    c_jj = derive_capacitance(device.normal_resistance, e_th)
    omega_p0, q0, e_j0 = derive_plasma_and_quality(i_c, c_jj, device.normal_resistance)
    return JunctionParams(
        i_c=i_c,
        r_n=device.normal_resistance,
        c_jj=c_jj,
        e_j0=e_j0,
        omega_p0=omega_p0,
        q0=q0,
        gap=device.gap,
        t_base=device.base_temperature,
        e_thouless=e_th,
        d_e=d_e,
        l_mfp=l_mfp,
    )


def with_critical_current(params: JunctionParams, i_c: float) -> JunctionParams:
    """Recompute the I_c-dependent parameters, keeping C_JJ, R_n and the rest."""
    omega_p0, q0, e_j0 = derive_plasma_and_quality(i_c, params.c_jj, params.r_n)
    return replace(params, i_c=i_c, omega_p0=omega_p0, q0=q0, e_j0=e_j0)


# ---------------------------------------------------------------------------
# device file I/O
# ---------------------------------------------------------------------------

_REQUIRED_FIELDS = (
    "name",
    "width_um",
    "channel_length_measured_nm",
    "channel_length_design_nm",
    "graphene_layers",
    "normal_resistance_ohm",
    "gap_mev",
    "electron_density_per_cm2",
    "mobility_cm2_per_vs",
    "v_cnp_volt",
    "measured_polarization_ratio",
    "base_temperature_k",
)


def load_devices(path: str | Path) -> dict[str, DeviceConfig]:
    """Load device records from a JSON file, converting to SI.

    The file holds ``{"devices": [...]}`` with one record per device and
    field names carrying explicit unit suffixes (um, nm, ohm, meV, cm^-2,
    cm^2/Vs, V, K); currents are in uA.

    Raises
    ------
    ConfigError
        If the file is empty or a record misses a required field.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read device file {path}: {exc}") from exc
    records = raw.get("devices", [])
    if not records:
        raise ConfigError(
            f"device file {path} lists no devices; required fields per record: "
            + ", ".join(_REQUIRED_FIELDS)
        )
    devices: dict[str, DeviceConfig] = {}
    for record in records:
        missing = [f for f in _REQUIRED_FIELDS if f not in record]
        if missing:
            raise ConfigError(
                f"device record {record.get('name', '<unnamed>')!r} is missing "
                f"fields: {', '.join(missing)}"
            )
        i_c = record.get("critical_current_ua")
        i_s = record.get("mean_switching_current_ua")
        dev = DeviceConfig(
            name=str(record["name"]),
            width=record["width_um"] * 1e-6,
            channel_length_measured=record["channel_length_measured_nm"] * 1e-9,
            channel_length_design=record["channel_length_design_nm"] * 1e-9,
            graphene_layers=int(record["graphene_layers"]),
            normal_resistance=float(record["normal_resistance_ohm"]),
            gap=record["gap_mev"] * 1e-3 * _E,
            electron_density=record["electron_density_per_cm2"] * 1e4,
            mobility=record["mobility_cm2_per_vs"] * 1e-4,
            fermi_velocity=float(record.get("fermi_velocity_m_per_s", DEFAULT_FERMI_VELOCITY)),
            v_cnp=float(record["v_cnp_volt"]),
            measured_polarization_ratio=float(record["measured_polarization_ratio"]),
            base_temperature=float(record["base_temperature_k"]),
            critical_current=None if i_c is None else i_c * 1e-6,
            mean_switching_current=None if i_s is None else i_s * 1e-6,
        )
        devices[dev.name] = dev
    return devices


def format_report(device: DeviceConfig, params: JunctionParams) -> str:
    """Human-readable parameter report for one device (human units)."""
    lines = [
        f"device {device.name}",
        f"  mean free path      {params.l_mfp * 1e9:10.2f} nm",
        f"  diffusion constant  {params.d_e:10.4f} m^2/s",
        f"  Thouless energy     {params.e_thouless / _E * 1e3:10.3f} meV",
        f"  capacitance C_JJ    {params.c_jj * 1e15:10.2f} fF",
        f"  critical current    {params.i_c * 1e6:10.3f} uA",
        f"  coupling E_J0       {params.e_j0 / _E * 1e3:10.2f} meV",
        f"  omega_p0 / 2 pi     {params.omega_p0 / (2 * math.pi) / 1e9:10.1f} GHz",
        f"  quality factor Q0   {params.q0:10.3f}",
        f"  I_c R_n product     {params.i_c * params.r_n * 1e6:10.1f} uV",
    ]
    return "\n".join(lines)
