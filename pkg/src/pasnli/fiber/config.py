"""Fiber link and transceiver parameters."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0
PLANCK = 6.62607015e-34
# guard factor on the WDM bandwidth when choosing the simulation rate
SPECTRAL_GUARD = 1.25


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LinkSystemConfig:
    """Fiber link, WDM grid and split-step settings.

    Parameters
    ----------
    span_length_km, n_spans : float, int
        Uniform spans, each followed by an amplifier compensating its loss.
    attenuation_db_per_km, dispersion_ps_nm_km, gamma_per_w_km : float
        Standard single-mode fiber parameters.
    noise_figure_db : float
        EDFA noise figure; ``None`` disables ASE noise.
    oversampling : int
        Samples per symbol of the transceiver DSP.
    sim_oversampling : int, optional
        Samples per symbol of the propagated waveform.  Chosen automatically
        to cover the WDM grid when omitted.
    dual_pol : bool
        Manakov propagation with the 8/9 factor when true, scalar NLSE otherwise.
    step_mode : {"nonlinear_phase", "logarithmic"}
        Step-size rule.  ``max_nl_phase`` bounds the per-step nonlinear phase
        rotation and ``max_step_km`` the step length, which keeps the weak
        tail of long spans resolved; ``steps_per_span`` sets the logarithmic
        step count.
    """

    span_length_km: float = 80.0
    n_spans: int = 20
    attenuation_db_per_km: float = 0.2
    dispersion_ps_nm_km: float = 17.0
    gamma_per_w_km: float = 1.37
    noise_figure_db: float | None = 6.0
    center_wavelength_nm: float = 1550.0
    baud_rate_gbd: float = 32.0
    wdm_spacing_ghz: float = 50.0
    n_channels: int = 1
    rolloff: float = 0.1
    oversampling: int = 2
    sim_oversampling: int | None = None
    launch_power_dbm: float = -6.5
    dual_pol: bool = True
    step_mode: str = "nonlinear_phase"
    max_nl_phase: float = 1e-3
    max_step_km: float = 2.0
    steps_per_span: int = 200

    def __post_init__(self):
        positive = (
            "span_length_km", "baud_rate_gbd", "center_wavelength_nm", "wdm_spacing_ghz",
            "max_nl_phase", "max_step_km",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("attenuation_db_per_km", "gamma_per_w_km", "dispersion_ps_nm_km"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.n_spans < 1 or self.n_channels < 1 or self.steps_per_span < 1:
            raise ConfigError("n_spans, n_channels and steps_per_span must be >= 1")
        if self.n_channels % 2 == 0:
            raise ConfigError("n_channels must be odd so the grid is centered on channel 0")
        if not 0 <= self.rolloff <= 1:
            raise ConfigError("rolloff must be in [0, 1]")
        if self.oversampling < 2:
            raise ConfigError("oversampling must be >= 2")
        if self.step_mode not in ("nonlinear_phase", "logarithmic"):
            raise ConfigError(f"unknown step_mode {self.step_mode!r}")
        if self.n_channels > 1 and self.wdm_spacing_ghz < self.baud_rate_gbd * (1 + self.rolloff):
            raise ConfigError("WDM spacing smaller than the channel bandwidth")
        if self.sim_oversampling is not None:
            if self.sim_oversampling < self.oversampling:
                raise ConfigError("sim_oversampling below the DSP oversampling")
            if self.sim_oversampling * self.baud_rate_gbd < self.occupied_bandwidth_ghz:
                raise ConfigError(
                    f"sim_oversampling {self.sim_oversampling} aliases a "
                    f"{self.occupied_bandwidth_ghz:.1f} GHz WDM grid"
                )

    # derived quantities, SI units
    @property
    def occupied_bandwidth_ghz(self) -> float:
        return (self.n_channels - 1) * self.wdm_spacing_ghz + self.baud_rate_gbd * (1 + self.rolloff)

    @property
    def samples_per_symbol(self) -> int:
        """Simulation samples per symbol."""
        if self.sim_oversampling is not None:
            return self.sim_oversampling
        need = SPECTRAL_GUARD * self.occupied_bandwidth_ghz / self.baud_rate_gbd
        return max(self.oversampling, math.ceil(need))

    @property
    def symbol_period(self) -> float:
        return 1.0 / (self.baud_rate_gbd * 1e9)

    @property
    def alpha_per_m(self) -> float:
        """Power attenuation coefficient in 1/m."""
        return self.attenuation_db_per_km / (10 * math.log10(math.e)) / 1e3

    @property
    def beta2(self) -> float:
        """Group velocity dispersion in s^2/m."""
        lam = self.center_wavelength_nm * 1e-9
        return -(self.dispersion_ps_nm_km * 1e-6) * lam**2 / (2 * math.pi * SPEED_OF_LIGHT)

    @property
    def gamma_per_w_m(self) -> float:
        return self.gamma_per_w_km / 1e3

    @property
    def nl_factor(self) -> float:
        """Polarization-averaged nonlinearity factor (8/9 for Manakov)."""
        return 8.0 / 9.0 if self.dual_pol else 1.0

    @property
    def span_length_m(self) -> float:
        return self.span_length_km * 1e3

    @property
    def link_length_km(self) -> float:
        return self.span_length_km * self.n_spans

    @property
    def channel_offsets_hz(self) -> list:
        half = self.n_channels // 2
        return [c * self.wdm_spacing_ghz * 1e9 for c in range(-half, half + 1)]

    @property
    def channel_indices(self) -> list:
        half = self.n_channels // 2
        return list(range(-half, half + 1))

    @property
    def carrier_frequency(self) -> float:
        return SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)

    @property
    def span_gain(self) -> float:
        return math.exp(self.alpha_per_m * self.span_length_m)

    @property
    def n_pol(self) -> int:
        return 2 if self.dual_pol else 1

    def replace(self, **changes) -> "LinkSystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def link_hash(self) -> str:
        """Hash of the fields that determine the NLI filters."""
        keys = (
            "span_length_km", "n_spans", "attenuation_db_per_km", "dispersion_ps_nm_km",
            "center_wavelength_nm", "baud_rate_gbd", "wdm_spacing_ghz", "dual_pol",
        )
        blob = json.dumps({k: getattr(self, k) for k in keys}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def setup1_link(**overrides) -> LinkSystemConfig:
    """80 km x 20 spans, 32 GBd, 50 GHz grid, 11 channels."""
    base = dict(
        span_length_km=80.0, n_spans=20, attenuation_db_per_km=0.2, dispersion_ps_nm_km=17.0,
        gamma_per_w_km=1.37, noise_figure_db=6.0, baud_rate_gbd=32.0, wdm_spacing_ghz=50.0,
        n_channels=11, rolloff=0.1, oversampling=2,
    )
    base.update(overrides)
    return LinkSystemConfig(**base)


def setup2_link(**overrides) -> LinkSystemConfig:
    """Single 205 km span, 50 GBd, 55 GHz grid."""
    base = dict(
        span_length_km=205.0, n_spans=1, attenuation_db_per_km=0.2, dispersion_ps_nm_km=17.0,
        gamma_per_w_km=1.30, noise_figure_db=5.0, baud_rate_gbd=50.0, wdm_spacing_ghz=55.0,
        n_channels=1, rolloff=0.1, oversampling=2,
    )
    base.update(overrides)
    return LinkSystemConfig(**base)
