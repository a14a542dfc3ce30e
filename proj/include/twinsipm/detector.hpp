#pragma once

#include <string>

#include "twinsipm/distribution.hpp"

namespace twinsipm {

// One SiPM channel. eta is photon detection efficiency, epsilon the
// probability that a fired cell triggers one extra correlated avalanche,
// dark_mean the mean dark-count number per gate, gain the analog charge per
// avalanche (only used when converting to/from analog records).
struct DetectorConfig {
  double eta = 1.0;
  double epsilon = 0.0;
  double dark_mean = 0.0;
  double gain = 1.0;

  // Throws ValidationError naming `prefix.field` on the first violated bound.
  void validate(const std::string& prefix = "detector") const;
};

// Each photon survives independently with probability eta. Leaves
// normal-ordered g2 unchanged; eta == 1 is the identity, eta == 0 sends all
// mass to zero.
PhotonDistribution bernoulli_loss(const PhotonDistribution& dist, double eta);

// Adds an independent Poisson background of the given mean.
PhotonDistribution add_dark_counts(const PhotonDistribution& dist, double dark_mean,
                                   double tail_tol = kDefaultTailTol);

// Each of l primary avalanches triggers an extra one with probability
// epsilon: k = l + Binomial(l, epsilon). Support doubles; no truncation.
PhotonDistribution apply_crosstalk(const PhotonDistribution& dist, double epsilon);

// Full per-channel response: loss, then dark counts, then cross-talk.
PhotonDistribution detector_response(const PhotonDistribution& photons,
                                     const DetectorConfig& config,
                                     double tail_tol = kDefaultTailTol);

// Avalanche-count mean/variance implied by the detected-light moments, a
// Poisson dark background and pairwise cross-talk. This closed form counts
// duplicate-trigger overlaps slightly differently from the mechanism above;
// the variances agree to within 2*epsilon^2*(mean+dark).
Moments avalanche_moments(const Moments& detected, double dark_mean, double epsilon);

// g2 of the avalanche record given the normal-ordered g2 of the light, the
// avalanche mean, dark counts and cross-talk.
double g2_avalanche_model(double g2_photon, double k_mean, double dark_mean, double epsilon);

// Same curve with 1 + 1/modes substituted for the photon g2 of multimode
// thermal light. Everything is expressed in terms of the measured avalanche
// mean, so the curve can be fit without knowing eta.
double g2_avalanche_multimode(double k_mean, double modes, double epsilon, double dark_mean);

namespace detail {

// No argument checks; used by the fitter, which probes negative epsilon for
// finite differences.
inline double g2_avalanche_multimode_unchecked(double k_mean, double modes, double epsilon,
                                               double dark_mean) {
  const double b = 1.0 - (1.0 + epsilon) * dark_mean / k_mean;
  return 1.0 + b * b / modes + (1.0 + 3.0 * epsilon) / ((1.0 + epsilon) * k_mean);
}

}  // namespace detail

enum class SensitivityParam { kEpsilon, kDarkMean };

// Relative shift of g2 - provoked by an absolute shift of the parameter -
// normalized by the zero-imperfection value g2_0(k_mean, modes). Evaluated
// at epsilon = 0, dark_mean = 0.
double sensitivity_beta(SensitivityParam param, double modes, double k_mean);

}  // namespace twinsipm
