"""Twin-beam SiPM photon statistics: distributions, detector response,
shot sampling, correlation estimators, and detector-parameter fitting."""

from ._core import (
    AmbiguousBinError,
    BootstrapOptions,
    ConditionalStats,
    CorrelationStats,
    CurvePoint,
    DataError,
    DetectorConfig,
    DivergentStatisticError,
    FitResult,
    InsufficientStatisticsError,
    Moments,
    PhotonDistribution,
    SensitivityParam,
    ShotSeries,
    TwbParams,
    UndefinedStatisticError,
    ValidationError,
    ValueWithError,
    __version__,
    add_dark_counts,
    analog_from_count,
    analysis_report,
    apply_crosstalk,
    arm_g2,
    avalanche_moments,
    bernoulli_loss,
    conditional_stats,
    convolve,
    correlation_stats,
    count_from_analog,
    detector_response,
    fano,
    fano_conditional_model,
    fit_detector_params,
    g2_avalanche_model,
    g2_avalanche_multimode,
    g2_counts,
    g2_diff_detected,
    g2_diff_model,
    g2_diff_photons_excess,
    g2_excess_from_fano,
    g2_photons,
    marginal_distribution,
    moments,
    multimode_thermal,
    noise_reduction_factor,
    nrf_model,
    poisson,
    read_analog_csv,
    read_curve_csv,
    read_shot_csv,
    sample_twb,
    sensitivity_beta,
    write_analog_csv,
    write_curve_csv,
    write_shot_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
