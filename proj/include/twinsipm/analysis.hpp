#pragma once

#include <cstdint>
#include <vector>

#include "twinsipm/simulate.hpp"

namespace twinsipm {

struct BootstrapOptions {
  std::uint32_t resamples = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct ValueWithError {
  double value = 0.0;
  double std_err = 0.0;
};

// All pairwise statistics of one record, computed in a single pass and
// bootstrapped with one shared set of resamples. Moment fields use
// population (1/N) normalization throughout, which keeps the three g2
// identities and the sign rule exact in floating point.
struct CorrelationStats {
  std::size_t n_shots = 0;
  double mean1 = 0.0;
  double mean2 = 0.0;
  double sum_mean = 0.0;
  double diff_mean = 0.0;
  double diff_variance = 0.0;
  ValueWithError nrf;  // Var(k1-k2) / <k1+k2>
  // When |diff_mean| < 1e-9 * sum_mean the two difference g2s blow up; this
  // flag is set and their fields hold NaN.
  bool diff_divergent = false;
  ValueWithError g2_diff_detected;        // <d^2> / <d>^2
  ValueWithError g2_diff_photons_excess;  // g2_diff of the light minus 1 (balanced arms)
};

CorrelationStats correlation_stats(const ShotSeries& series, const BootstrapOptions& opts);

// The NRF alone; identical to correlation_stats(...).nrf bit for bit.
ValueWithError noise_reduction_factor(const ShotSeries& series, const BootstrapOptions& opts);

// Standalone difference-g2 estimators. Unlike the bundle above these throw
// DivergentStatisticError when the mean difference is consistent with zero.
ValueWithError g2_diff_detected(const ShotSeries& series, const BootstrapOptions& opts);
ValueWithError g2_diff_photons_excess(const ShotSeries& series, const BootstrapOptions& opts);

// NRF of lossy twin beams with per-arm efficiencies eta1/eta2 and detected
// means mean1/mean2, for thermal light over `modes` modes.
double nrf_model(double mean1, double mean2, double eta1, double eta2, double modes);

// g2 of the difference record implied by an NRF value and the two means.
double g2_diff_model(double nrf, double sum_mean, double diff_mean);

// g2 of one arm's count record, with bootstrap error.
ValueWithError arm_g2(const ShotSeries& series, int arm, const BootstrapOptions& opts);

// Statistics of arm B over the shots where arm A fired exactly m_cond times.
struct ConditionalStats {
  std::uint32_t m_cond = 0;
  std::size_t n_selected = 0;
  double mean = 0.0;
  ValueWithError fano;
  ValueWithError g2_photons_excess;  // (fano - 1) / mean
};

// Bootstrap resamples are drawn within the selected slice, so errors are
// conditional on n_selected.
ConditionalStats conditional_stats(const ShotSeries& series, int conditioning_arm,
                                   std::uint32_t m_cond, const BootstrapOptions& opts);

// Fano factor of the idler arm conditioned on m_cond detected signal counts,
// for multimode thermal twin beams watched by two detectors of efficiency
// eta (no dark counts, no cross-talk). mean_m is the unconditioned detected
// mean per arm.
double fano_conditional_model(double eta, double modes, double mean_m, std::uint32_t m_cond);

// Normal-ordered g2 minus 1 implied by a Fano factor and a mean.
double g2_excess_from_fano(double fano, double mean);

// One point of a g2-versus-mean calibration curve.
struct CurvePoint {
  double k_mean = 0.0;
  double g2 = 0.0;
  double std_err = 0.0;
};

struct FitResult {
  double epsilon = 0.0;
  double dark_mean = 0.0;
  double epsilon_err = 0.0;
  double dark_err = 0.0;
  double chi2 = 0.0;
  double residual_rms = 0.0;
  double mu_fixed = 1.0;
  std::uint32_t n_points = 0;
};

// Weighted least squares of the multimode avalanche g2 curve over
// (epsilon, dark_mean) with the mode number held fixed. Deterministic:
// exhaustive coarse grid, then grid refinement. Errors come from the
// curvature of chi2 at the minimum.
FitResult fit_detector_params(const std::vector<CurvePoint>& points, double mu_fixed);

}  // namespace twinsipm
