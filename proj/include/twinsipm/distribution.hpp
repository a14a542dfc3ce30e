#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace twinsipm {

// Default truncation budget for dense photon-number distributions.
inline constexpr double kDefaultTailTol = 1e-10;

// Dense probability mass function over counts 0..max_count, plus the mass
// truncated beyond the stored support. probs.size() >= 1 always; probs[n] is
// P(n). Invariants (enforced on construction):
//   - every probs[n] is finite and >= 0
//   - sum(probs) + tail_mass == 1 within 1e-12
//   - 0 <= tail_mass
struct PhotonDistribution {
  std::vector<double> probs;
  double tail_mass = 0.0;

  static PhotonDistribution from_probs(std::vector<double> probs, double tail_mass = 0.0);
  static PhotonDistribution delta(std::uint32_t n);

  std::size_t max_count() const { return probs.size() - 1; }
  double prob(std::size_t n) const { return n < probs.size() ? probs[n] : 0.0; }

  // Drops trailing support as long as the dropped mass plus the existing
  // tail stays within tol. Never drops P(0).
  PhotonDistribution truncated(double tol) const;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double second_raw = 0.0;  // E[n^2]
};

// Thermal light spread over `modes` equally populated modes with total mean
// `mean`. modes == 1 is the single-mode (geometric) case; large `modes`
// approaches Poisson. Support is grown until the remaining tail is <= tail_tol.
PhotonDistribution multimode_thermal(double mean, std::int64_t modes,
                                     double tail_tol = kDefaultTailTol);

PhotonDistribution poisson(double mean, double tail_tol = kDefaultTailTol);

// Distribution of the sum of two independent counts.
PhotonDistribution convolve(const PhotonDistribution& a, const PhotonDistribution& b,
                            double tail_tol = kDefaultTailTol);

// Mean / variance / raw second moment of the stored support. The truncated
// tail is ignored, so moments are exact only up to the tail budget.
Moments moments(const PhotonDistribution& dist);

// Normal-ordered second-order correlation <n(n-1)>/<n>^2.
double g2_photons(const Moments& m);

// g2 of a count record: variance/mean^2 + 1. Invariant under scaling, so the
// same value describes an analog record x = gain * k.
double g2_counts(const Moments& m);

// variance/mean.
double fano(const Moments& m);

// Compensated (Neumaier) sum. Exposed because tests and IO reuse it.
double neumaier_sum(const std::vector<double>& values);

}  // namespace twinsipm
