#include "twinsipm/distribution.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "twinsipm/errors.hpp"

namespace twinsipm {

namespace {

constexpr std::size_t kMaxSupport = 1 << 21;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Grows a pmf from p0 using ratio(n) = p(n+1)/p(n) until the tail is within
// budget. Shared by the thermal and Poisson builders.
template <typename Ratio>
PhotonDistribution build_by_recurrence(double p0, Ratio ratio, double tail_tol) {
  std::vector<double> probs;
  probs.push_back(p0);
  double cum = p0;
  double comp = 0.0;  // Neumaier correction for cum
  while (1.0 - (cum + comp) > tail_tol) {
    if (probs.size() >= kMaxSupport) {
      throw ValidationError("tail_tol: support exceeded " + std::to_string(kMaxSupport) +
                            " bins before reaching the requested tail budget");
    }
    const std::size_t n = probs.size() - 1;
    const double next = probs.back() * ratio(n);
    probs.push_back(next);
    const double t = cum + next;
    comp += (std::fabs(cum) >= std::fabs(next)) ? (cum - t) + next : (next - t) + cum;
    cum = t;
  }
  double tail = 1.0 - (cum + comp);
  if (tail < 0.0) tail = 0.0;
  return PhotonDistribution::from_probs(std::move(probs), tail);
}

}  // namespace

double neumaier_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += (std::fabs(sum) >= std::fabs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

PhotonDistribution PhotonDistribution::from_probs(std::vector<double> probs, double tail_mass) {
  if (probs.empty()) {
    throw ValidationError("probs: must contain at least P(0)");
  }
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const double p = probs[n];
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("probs[" + std::to_string(n) + "]: must be finite and >= 0, got " +
                            fmt_double(p));
    }
  }
  if (!std::isfinite(tail_mass) || tail_mass < 0.0) {
    throw ValidationError("tail_mass: must be finite and >= 0, got " + fmt_double(tail_mass));
  }
  const double total = neumaier_sum(probs) + tail_mass;
  if (std::fabs(total - 1.0) > 1e-12) {
    throw ValidationError("probs: sum + tail_mass must be 1 within 1e-12, got " +
                          fmt_double(total));
  }
  PhotonDistribution d;
  d.probs = std::move(probs);
  d.tail_mass = tail_mass;
  return d;
}

PhotonDistribution PhotonDistribution::delta(std::uint32_t n) {
  std::vector<double> probs(static_cast<std::size_t>(n) + 1, 0.0);
  probs[n] = 1.0;
  return from_probs(std::move(probs), 0.0);
}

PhotonDistribution PhotonDistribution::truncated(double tol) const {
  if (!std::isfinite(tol) || tol < 0.0) {
    throw ValidationError("tol: must be finite and >= 0, got " + fmt_double(tol));
  }
  std::size_t keep = probs.size();
  double dropped = 0.0;
  while (keep > 1) {
    const double cand = dropped + probs[keep - 1];
    if (tail_mass + cand > tol) break;
    dropped = cand;
    --keep;
  }
  if (keep == probs.size()) return *this;
  std::vector<double> head(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(keep));
  return from_probs(std::move(head), tail_mass + dropped);
}

PhotonDistribution multimode_thermal(double mean, std::int64_t modes, double tail_tol) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw ValidationError("mean: must be finite and >= 0, got " + fmt_double(mean));
  }
  if (modes < 1) {
    throw ValidationError("modes: must be >= 1, got " + std::to_string(modes));
  }
  if (!std::isfinite(tail_tol) || tail_tol <= 0.0 || tail_tol > 1e-2) {
    throw ValidationError("tail_tol: must be in (0, 1e-2], got " + fmt_double(tail_tol));
  }
  if (mean == 0.0) return PhotonDistribution::delta(0);

  const double mu = static_cast<double>(modes);
  const double q = mean / (mean + mu);
  const double log_p0 = -mu * std::log1p(mean / mu);
  if (log_p0 < -700.0) {
    throw ValidationError("mean/modes: P(0) underflows a dense pmf; this regime is unsupported");
  }
  const double p0 = std::exp(log_p0);
  return build_by_recurrence(
      p0, [q, mu](std::size_t n) { return q * (static_cast<double>(n) + mu) / (static_cast<double>(n) + 1.0); },
      tail_tol);
}

PhotonDistribution poisson(double mean, double tail_tol) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw ValidationError("mean: must be finite and >= 0, got " + fmt_double(mean));
  }
  if (!std::isfinite(tail_tol) || tail_tol <= 0.0 || tail_tol > 1e-2) {
    throw ValidationError("tail_tol: must be in (0, 1e-2], got " + fmt_double(tail_tol));
  }
  if (mean == 0.0) return PhotonDistribution::delta(0);
  if (mean > 700.0) {
    throw ValidationError("mean: P(0) underflows a dense pmf for mean > 700, got " +
                          fmt_double(mean));
  }
  const double p0 = std::exp(-mean);
  return build_by_recurrence(
      p0, [mean](std::size_t n) { return mean / (static_cast<double>(n) + 1.0); }, tail_tol);
}

PhotonDistribution convolve(const PhotonDistribution& a, const PhotonDistribution& b,
                            double tail_tol) {
  std::vector<double> out(a.probs.size() + b.probs.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    const double pa = a.probs[i];
    if (pa == 0.0) continue;
    for (std::size_t j = 0; j < b.probs.size(); ++j) {
      out[i + j] += pa * b.probs[j];
    }
  }
  // Mass reaching the sum through either input's tail stays in the tail.
  double tail = a.tail_mass + b.tail_mass - a.tail_mass * b.tail_mass;
  const double total = neumaier_sum(out);
  if (1.0 - total > tail) tail = 1.0 - total;
  return PhotonDistribution::from_probs(std::move(out), tail).truncated(tail_tol);
}

Moments moments(const PhotonDistribution& dist) {
  std::vector<double> first(dist.probs.size());
  std::vector<double> second(dist.probs.size());
  for (std::size_t n = 0; n < dist.probs.size(); ++n) {
    const double nd = static_cast<double>(n);
    first[n] = nd * dist.probs[n];
    second[n] = nd * nd * dist.probs[n];
  }
  Moments m;
  m.mean = neumaier_sum(first);
  m.second_raw = neumaier_sum(second);
  const double var = m.second_raw - m.mean * m.mean;
  if (var < -1e-12) {
    throw DataError("variance: moment sums give " + fmt_double(var) + ", below -1e-12");
  }
  m.variance = var < 0.0 ? 0.0 : var;
  return m;
}

double g2_photons(const Moments& m) {
  if (m.mean <= 0.0) {
    throw UndefinedStatisticError("g2: undefined for mean 0");
  }
  return (m.second_raw - m.mean) / (m.mean * m.mean);
}

double g2_counts(const Moments& m) {
  if (m.mean <= 0.0) {
    throw UndefinedStatisticError("g2: undefined for mean 0");
  }
  return m.variance / (m.mean * m.mean) + 1.0;
}

double fano(const Moments& m) {
  if (m.mean <= 0.0) {
    throw UndefinedStatisticError("fano: undefined for mean 0");
  }
  return m.variance / m.mean;
}

}  // namespace twinsipm
