from .distributional import (
    EmbeddingSet,
    GaussianStats,
    coverage,
    density,
    fad,
    fit_gaussian,
    kid,
    kld_gaussian,
    load_embeddings,
    save_embeddings,
)
from .signal import bss_eval, ci_sdr, fwsegsnr, log_wmse, si_snr, signal_metric
from .spectral import (
    McdF0Params,
    MelCepstrumTrack,
    PitchTrack,
    cepstrum_distance,
    extract_f0,
    extract_mcep,
    llr,
    mcd_f0,
    stoi,
    wss,
)
from .srmr import modulation_energy_grid, srmr
