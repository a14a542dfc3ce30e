#include "twinsipm/detector.hpp"

#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "twinsipm/errors.hpp"

namespace twinsipm {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Binomial(n, p) row pmf into w[0..n]. Recurrence direction is picked so the
// ratio never divides by the smaller of p, 1-p.
void binomial_row(std::size_t n, double p, std::vector<double>& w) {
  w.assign(n + 1, 0.0);
  if (n == 0) {
    w[0] = 1.0;
    return;
  }
  const double nd = static_cast<double>(n);
  if (p <= 0.5) {
    const double r = p / (1.0 - p);
    w[0] = std::pow(1.0 - p, nd);
    for (std::size_t m = 0; m + 1 <= n; ++m) {
      w[m + 1] = w[m] * r * (nd - static_cast<double>(m)) / (static_cast<double>(m) + 1.0);
    }
  } else {
    const double r = (1.0 - p) / p;
    w[n] = std::pow(p, nd);
    for (std::size_t m = n; m > 0; --m) {
      w[m - 1] = w[m] * r * static_cast<double>(m) / (nd - static_cast<double>(m) + 1.0);
    }
  }
}

}  // namespace

void DetectorConfig::validate(const std::string& prefix) const {
  if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0) {
    throw ValidationError(prefix + ".eta: must be in (0, 1], got " + fmt_double(eta));
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError(prefix + ".epsilon: must be in [0, 1), got " + fmt_double(epsilon));
  }
  if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
    throw ValidationError(prefix + ".dark_mean: must be >= 0, got " + fmt_double(dark_mean));
  }
  if (!std::isfinite(gain) || gain <= 0.0) {
    throw ValidationError(prefix + ".gain: must be > 0, got " + fmt_double(gain));
  }
}

PhotonDistribution bernoulli_loss(const PhotonDistribution& dist, double eta) {
  if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) {
    throw ValidationError("eta: must be in [0, 1], got " + fmt_double(eta));
  }
  if (eta == 1.0) return dist;
  std::vector<double> out(dist.probs.size(), 0.0);
  std::vector<double> row;
  for (std::size_t n = 0; n < dist.probs.size(); ++n) {
    const double p = dist.probs[n];
    if (p == 0.0) continue;
    binomial_row(n, eta, row);
    for (std::size_t m = 0; m <= n; ++m) {
      out[m] += p * row[m];
    }
  }
  // Thinning cannot raise the count, so mass truncated upstream lands
  // somewhere in 0..max_count; keeping it in the tail stays conservative.
  return PhotonDistribution::from_probs(std::move(out), dist.tail_mass).truncated(dist.tail_mass);
}

PhotonDistribution add_dark_counts(const PhotonDistribution& dist, double dark_mean,
                                   double tail_tol) {
  if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
    throw ValidationError("dark_mean: must be >= 0, got " + fmt_double(dark_mean));
  }
  if (dark_mean == 0.0) return dist;
  return convolve(dist, poisson(dark_mean, tail_tol), tail_tol);
}

PhotonDistribution apply_crosstalk(const PhotonDistribution& dist, double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError("epsilon: must be in [0, 1), got " + fmt_double(epsilon));
  }
  if (epsilon == 0.0) return dist;
  std::vector<double> out(2 * dist.probs.size() - 1, 0.0);
  std::vector<double> row;
  for (std::size_t l = 0; l < dist.probs.size(); ++l) {
    const double p = dist.probs[l];
    if (p == 0.0) continue;
    binomial_row(l, epsilon, row);
    for (std::size_t j = 0; j <= l; ++j) {
      out[l + j] += p * row[j];
    }
  }
  return PhotonDistribution::from_probs(std::move(out), dist.tail_mass);
}

PhotonDistribution detector_response(const PhotonDistribution& photons,
                                     const DetectorConfig& config, double tail_tol) {
  config.validate();
  PhotonDistribution d = bernoulli_loss(photons, config.eta);
  d = add_dark_counts(d, config.dark_mean, tail_tol);
  d = apply_crosstalk(d, config.epsilon);
  return d.truncated(tail_tol);
}

Moments avalanche_moments(const Moments& detected, double dark_mean, double epsilon) {
  if (!std::isfinite(detected.mean) || detected.mean < 0.0) {
    throw ValidationError("detected.mean: must be >= 0, got " + fmt_double(detected.mean));
  }
  if (!std::isfinite(detected.variance) || detected.variance < 0.0) {
    throw ValidationError("detected.variance: must be >= 0, got " + fmt_double(detected.variance));
  }
  if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
    throw ValidationError("dark_mean: must be >= 0, got " + fmt_double(dark_mean));
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError("epsilon: must be in [0, 1), got " + fmt_double(epsilon));
  }
  const double primary_mean = detected.mean + dark_mean;
  const double primary_var = detected.variance + dark_mean;
  const double s = 1.0 + epsilon;
  Moments k;
  k.mean = s * primary_mean;
  k.variance = s * s * primary_var + epsilon * s * primary_mean;
  k.second_raw = k.variance + k.mean * k.mean;
  return k;
}

double g2_avalanche_model(double g2_photon, double k_mean, double dark_mean, double epsilon) {
  if (!std::isfinite(g2_photon) || g2_photon < 0.0) {
    throw ValidationError("g2_photon: must be >= 0, got " + fmt_double(g2_photon));
  }
  if (!std::isfinite(k_mean) || k_mean <= 0.0) {
    throw ValidationError("k_mean: must be > 0, got " + fmt_double(k_mean));
  }
  if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
    throw ValidationError("dark_mean: must be >= 0, got " + fmt_double(dark_mean));
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError("epsilon: must be in [0, 1), got " + fmt_double(epsilon));
  }
  const double b = 1.0 - (1.0 + epsilon) * dark_mean / k_mean;
  return 1.0 + (g2_photon - 1.0) * b * b + (1.0 + 3.0 * epsilon) / ((1.0 + epsilon) * k_mean);
}

double g2_avalanche_multimode(double k_mean, double modes, double epsilon, double dark_mean) {
  if (!std::isfinite(modes) || modes < 1.0) {
    throw ValidationError("modes: must be >= 1, got " + fmt_double(modes));
  }
  if (!std::isfinite(k_mean) || k_mean <= 0.0) {
    throw ValidationError("k_mean: must be > 0, got " + fmt_double(k_mean));
  }
  if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
    throw ValidationError("dark_mean: must be >= 0, got " + fmt_double(dark_mean));
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError("epsilon: must be in [0, 1), got " + fmt_double(epsilon));
  }
  return detail::g2_avalanche_multimode_unchecked(k_mean, modes, epsilon, dark_mean);
}

double sensitivity_beta(SensitivityParam param, double modes, double k_mean) {
  if (!std::isfinite(modes) || modes < 1.0) {
    throw ValidationError("modes: must be >= 1, got " + fmt_double(modes));
  }
  if (!std::isfinite(k_mean) || k_mean <= 0.0) {
    throw ValidationError("k_mean: must be > 0, got " + fmt_double(k_mean));
  }
  const double g2_zero = 1.0 + 1.0 / modes + 1.0 / k_mean;
  switch (param) {
    case SensitivityParam::kEpsilon:
      return (2.0 / k_mean) / g2_zero;
    case SensitivityParam::kDarkMean:
      return (-2.0 / (modes * k_mean)) / g2_zero;
  }
  throw ValidationError("param: unknown sensitivity parameter");
}

}  // namespace twinsipm
