#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "twinsipm/detector.hpp"
#include "twinsipm/distribution.hpp"

namespace twinsipm {

// Twin-beam source plus the two detector channels looking at it.
struct TwbParams {
  std::int64_t modes = 1;
  double mean_n = 0.0;  // mean photon number per arm
  DetectorConfig det1;
  DetectorConfig det2;

  void validate() const;
};

// Per-shot avalanche counts of both arms. params/seed are carried along when
// known so reports can echo the provenance.
struct ShotSeries {
  std::vector<std::array<std::uint32_t, 2>> shots;
  std::uint64_t seed = 0;
  TwbParams params;
  bool has_params = false;
};

// Draws n_shots gated exposures. Both arms share the same photon number per
// shot (one geometric draw per mode, summed), then each arm applies loss,
// dark counts and cross-talk independently. Shot i is computed from its own
// RNG stream, so the record is identical for any thread count.
ShotSeries sample_twb(const TwbParams& params, std::uint64_t n_shots, std::uint64_t seed,
                      unsigned threads = 1);

// Empirical count distribution of one arm (1 or 2).
PhotonDistribution marginal_distribution(const ShotSeries& series, int arm);

// Counts are canonical; analog records are gain * count.
double analog_from_count(std::uint32_t count, double gain);

// Bins an analog value back to a count. Values farther than 0.25 bins from
// an integer, or below -0.25 bins, raise AmbiguousBinError.
std::uint32_t count_from_analog(double x, double gain);

}  // namespace twinsipm
