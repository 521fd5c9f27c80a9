"""Configured sweeps over shaping, selection and launch power, with figure-data emission."""

from .config import PRESETS, ExperimentConfig, SchemaError, config_hash, from_dict, load_config, preset, validate
from .figures import FIGURES, FigureError, figure_csv, verify_csv, verify_rows
from .runner import RunRecord, SweepPoint, filter_bank, quadratic_optimum, run, sweep_points
from .transmit import TransmitFrame, generate_frame, make_shaper
