#include "twinsipm/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

#include "parallel.hpp"
#include "twinsipm/errors.hpp"
#include "twinsipm/rng.hpp"

namespace twinsipm {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint32_t clamp_u32(std::uint64_t v) {
  return v > std::numeric_limits<std::uint32_t>::max()
             ? std::numeric_limits<std::uint32_t>::max()
             : static_cast<std::uint32_t>(v);
}

std::uint32_t detect_arm(Rng& rng, std::uint64_t n_photons, const DetectorConfig& det) {
  const std::uint64_t m = sample_binomial(rng, n_photons, det.eta);
  const std::uint64_t l = m + sample_poisson(rng, det.dark_mean);
  const std::uint64_t k = l + sample_binomial(rng, l, det.epsilon);
  return clamp_u32(k);
}

}  // namespace

void TwbParams::validate() const {
  if (modes < 1) {
    throw ValidationError("modes: must be >= 1, got " + std::to_string(modes));
  }
  if (!std::isfinite(mean_n) || mean_n < 0.0) {
    throw ValidationError("mean_n: must be finite and >= 0, got " + fmt_double(mean_n));
  }
  det1.validate("det1");
  det2.validate("det2");
}

ShotSeries sample_twb(const TwbParams& params, std::uint64_t n_shots, std::uint64_t seed,
                      unsigned threads) {
  params.validate();
  if (n_shots < 1) {
    throw ValidationError("n_shots: must be >= 1");
  }
  if (threads < 1) threads = 1;

  ShotSeries series;
  series.shots.resize(n_shots);
  series.seed = seed;
  series.params = params;
  series.has_params = true;

  const double per_mode_mean = params.mean_n / static_cast<double>(params.modes);
  const std::int64_t modes = params.modes;
  auto* out = series.shots.data();
  detail::parallel_chunks(n_shots, threads, [&, out](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) {
      Rng rng(seed, stream_domain::kShots, i);
      std::uint64_t n = 0;
      for (std::int64_t mode = 0; mode < modes; ++mode) {
        n += sample_geometric(rng, per_mode_mean);
      }
      out[i][0] = detect_arm(rng, n, params.det1);
      out[i][1] = detect_arm(rng, n, params.det2);
    }
  });
  return series;
}

PhotonDistribution marginal_distribution(const ShotSeries& series, int arm) {
  if (arm != 1 && arm != 2) {
    throw ValidationError("arm: must be 1 or 2, got " + std::to_string(arm));
  }
  if (series.shots.empty()) {
    throw ValidationError("series: contains no shots");
  }
  std::uint32_t max_k = 0;
  const std::size_t col = static_cast<std::size_t>(arm - 1);
  for (const auto& shot : series.shots) {
    if (shot[col] > max_k) max_k = shot[col];
  }
  std::vector<double> counts(static_cast<std::size_t>(max_k) + 1, 0.0);
  for (const auto& shot : series.shots) {
    counts[shot[col]] += 1.0;
  }
  const double n = static_cast<double>(series.shots.size());
  for (double& c : counts) c /= n;
  return PhotonDistribution::from_probs(std::move(counts), 0.0);
}

double analog_from_count(std::uint32_t count, double gain) {
  if (!std::isfinite(gain) || gain <= 0.0) {
    throw ValidationError("gain: must be > 0, got " + fmt_double(gain));
  }
  return static_cast<double>(count) * gain;
}

std::uint32_t count_from_analog(double x, double gain) {
  if (!std::isfinite(gain) || gain <= 0.0) {
    throw ValidationError("gain: must be > 0, got " + fmt_double(gain));
  }
  if (!std::isfinite(x)) {
    throw ValidationError("x: must be finite, got " + fmt_double(x));
  }
  const double bins = x / gain;
  const double nearest = std::round(bins);
  if (nearest < 0.0 || std::fabs(bins - nearest) > 0.25) {
    throw AmbiguousBinError(x, gain);
  }
  return clamp_u32(static_cast<std::uint64_t>(nearest));
}

}  // namespace twinsipm
