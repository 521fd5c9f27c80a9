from .config import ConfigError, LinkSystemConfig, setup1_link, setup2_link
from .pulse import rrc_pulse, rrc_response
from .ssfm import StepSizeError, amplify, ase_psd, propagate, propagate_span
from .waveform import (
    Waveform,
    ase_snr_db,
    dispersion_phase,
    mean_phase,
    modulate,
    receive,
    scale_to_launch_power,
)
