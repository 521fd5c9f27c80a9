"""Fixed-length amplitude shapers."""

from .ccdm import (
    CcdmShaper,
    DecodeError,
    ccdm_capacity,
    ccdm_decode,
    ccdm_encode,
    multinomial,
    quantize_composition,
    rank,
    rank_batch,
    unrank,
    unrank_batch,
)
from .ess import (
    EmptyCodebookError,
    EssShaper,
    EssTrellis,
    build_ess_trellis,
    codebook_amplitude_counts,
    energy_enumerator,
    ess_decode,
    ess_encode,
    ess_rank,
    ess_unrank,
    kess_bounds,
    min_energy_for_capacity,
)
from .ideal import IdealShaper, ideal_as
from .fixed_rate import FixedRateShaper, ccdm_for_rate, ideal_distribution
