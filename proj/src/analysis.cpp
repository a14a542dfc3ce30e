#include "twinsipm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "parallel.hpp"
#include "twinsipm/detector.hpp"
#include "twinsipm/errors.hpp"
#include "twinsipm/rng.hpp"

namespace twinsipm {

namespace {

constexpr double kDivergenceGuard = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Count sums are integer valued, so plain double accumulation is exact for
// any record size this tool can hold.
struct JointSums {
  double s = 0.0;   // sum of k1 + k2
  double d = 0.0;   // sum of k1 - k2
  double d2 = 0.0;  // sum of (k1 - k2)^2
};

JointSums joint_sums_all(const ShotSeries& series) {
  JointSums js;
  for (const auto& shot : series.shots) {
    const double k1 = shot[0];
    const double k2 = shot[1];
    const double d = k1 - k2;
    js.s += k1 + k2;
    js.d += d;
    js.d2 += d * d;
  }
  return js;
}

struct JointEstimates {
  double sum_mean;
  double diff_mean;
  double diff_second;
  double diff_variance;
  double nrf;
};

JointEstimates joint_estimates(const JointSums& js, double n) {
  JointEstimates e;
  e.sum_mean = js.s / n;
  e.diff_mean = js.d / n;
  e.diff_second = js.d2 / n;
  e.diff_variance = e.diff_second - e.diff_mean * e.diff_mean;
  e.nrf = e.diff_variance / e.sum_mean;
  return e;
}

double replicate_sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (n - 1.0));
}

struct JointReplicates {
  std::vector<double> nrf;
  std::vector<double> g2dd;
  std::vector<double> g2dn;
};

// One shared set of resamples feeds all three joint statistics, so their
// errors come from the same fluctuations.
JointReplicates bootstrap_joint(const ShotSeries& series, const BootstrapOptions& opts) {
  const std::size_t n = series.shots.size();
  JointReplicates reps;
  reps.nrf.resize(opts.resamples);
  reps.g2dd.resize(opts.resamples);
  reps.g2dn.resize(opts.resamples);
  const auto* shots = series.shots.data();
  detail::parallel_chunks(opts.resamples, opts.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t b = lo; b < hi; ++b) {
      Rng rng(opts.seed, stream_domain::kBootstrapJoint, b);
      JointSums js;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& shot = shots[rng.next() % n];
        const double k1 = shot[0];
        const double k2 = shot[1];
        const double d = k1 - k2;
        js.s += k1 + k2;
        js.d += d;
        js.d2 += d * d;
      }
      const JointEstimates e = joint_estimates(js, static_cast<double>(n));
      reps.nrf[b] = e.nrf;
      reps.g2dd[b] = e.diff_second / (e.diff_mean * e.diff_mean);
      reps.g2dn[b] = (e.nrf - 1.0) * e.sum_mean / (e.diff_mean * e.diff_mean);
    }
  });
  return reps;
}

struct JointResult {
  JointEstimates est;
  ValueWithError nrf;
  ValueWithError g2dd;
  ValueWithError g2dn;
  bool divergent;
};

JointResult joint_result(const ShotSeries& series, const BootstrapOptions& opts) {
  opts.validate();
  if (series.shots.empty()) {
    throw ValidationError("series: contains no shots");
  }
  const double n = static_cast<double>(series.shots.size());
  const JointEstimates e = joint_estimates(joint_sums_all(series), n);
  if (e.sum_mean <= 0.0) {
    throw UndefinedStatisticError("sum_mean: zero total mean, pairwise statistics undefined");
  }
  const JointReplicates reps = bootstrap_joint(series, opts);
  JointResult r;
  r.est = e;
  r.nrf = {e.nrf, replicate_sd(reps.nrf)};
  r.divergent = std::fabs(e.diff_mean) < kDivergenceGuard * e.sum_mean;
  if (r.divergent) {
    r.g2dd = {kNaN, kNaN};
    r.g2dn = {kNaN, kNaN};
  } else {
    const double dm2 = e.diff_mean * e.diff_mean;
    r.g2dd = {e.diff_second / dm2, replicate_sd(reps.g2dd)};
    r.g2dn = {(e.nrf - 1.0) * e.sum_mean / dm2, replicate_sd(reps.g2dn)};
  }
  return r;
}

}  // namespace

void BootstrapOptions::validate() const {
  if (resamples < 2) {
    throw ValidationError("resamples: must be >= 2, got " + std::to_string(resamples));
  }
  if (threads < 1) {
    throw ValidationError("threads: must be >= 1");
  }
}

CorrelationStats correlation_stats(const ShotSeries& series, const BootstrapOptions& opts) {
  const JointResult r = joint_result(series, opts);
  CorrelationStats cs;
  cs.n_shots = series.shots.size();
  cs.sum_mean = r.est.sum_mean;
  cs.diff_mean = r.est.diff_mean;
  cs.diff_variance = r.est.diff_variance;
  cs.mean1 = 0.5 * (r.est.sum_mean + r.est.diff_mean);
  cs.mean2 = 0.5 * (r.est.sum_mean - r.est.diff_mean);
  cs.nrf = r.nrf;
  cs.diff_divergent = r.divergent;
  cs.g2_diff_detected = r.g2dd;
  cs.g2_diff_photons_excess = r.g2dn;
  return cs;
}

ValueWithError noise_reduction_factor(const ShotSeries& series, const BootstrapOptions& opts) {
  return joint_result(series, opts).nrf;
}

ValueWithError g2_diff_detected(const ShotSeries& series, const BootstrapOptions& opts) {
  const JointResult r = joint_result(series, opts);
  if (r.divergent) {
    throw DivergentStatisticError(r.est.diff_mean, r.est.sum_mean, r.est.diff_second);
  }
  return r.g2dd;
}

ValueWithError g2_diff_photons_excess(const ShotSeries& series, const BootstrapOptions& opts) {
  const JointResult r = joint_result(series, opts);
  if (r.divergent) {
    throw DivergentStatisticError(r.est.diff_mean, r.est.sum_mean, r.est.diff_second);
  }
  return r.g2dn;
}

double nrf_model(double mean1, double mean2, double eta1, double eta2, double modes) {
  if (!std::isfinite(mean1) || mean1 < 0.0 || !std::isfinite(mean2) || mean2 < 0.0) {
    throw ValidationError("mean1/mean2: must be finite and >= 0");
  }
  if (mean1 + mean2 <= 0.0) {
    throw ValidationError("mean1+mean2: must be > 0");
  }
  if (!std::isfinite(eta1) || eta1 <= 0.0 || eta1 > 1.0 || !std::isfinite(eta2) || eta2 <= 0.0 ||
      eta2 > 1.0) {
    throw ValidationError("eta1/eta2: must be in (0, 1]");
  }
  if (!std::isfinite(modes) || modes < 1.0) {
    throw ValidationError("modes: must be >= 1, got " + fmt_double(modes));
  }
  const double sum = mean1 + mean2;
  return 1.0 - 2.0 * std::sqrt(eta1 * eta2) * std::sqrt(mean1 * mean2) / sum +
         (mean1 - mean2) * (mean1 - mean2) / (modes * sum);
}

double g2_diff_model(double nrf, double sum_mean, double diff_mean) {
  if (!std::isfinite(nrf) || nrf < 0.0) {
    throw ValidationError("nrf: must be finite and >= 0, got " + fmt_double(nrf));
  }
  if (!std::isfinite(sum_mean) || sum_mean <= 0.0) {
    throw ValidationError("sum_mean: must be > 0, got " + fmt_double(sum_mean));
  }
  if (!std::isfinite(diff_mean)) {
    throw ValidationError("diff_mean: must be finite");
  }
  if (std::fabs(diff_mean) < kDivergenceGuard * sum_mean) {
    throw DivergentStatisticError(diff_mean, sum_mean, nrf * sum_mean + diff_mean * diff_mean);
  }
  return 1.0 + nrf * sum_mean / (diff_mean * diff_mean);
}

ValueWithError arm_g2(const ShotSeries& series, int arm, const BootstrapOptions& opts) {
  opts.validate();
  if (arm != 1 && arm != 2) {
    throw ValidationError("arm: must be 1 or 2, got " + std::to_string(arm));
  }
  if (series.shots.empty()) {
    throw ValidationError("series: contains no shots");
  }
  const std::size_t col = static_cast<std::size_t>(arm - 1);
  const std::size_t n = series.shots.size();
  const double nd = static_cast<double>(n);
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& shot : series.shots) {
    const double k = shot[col];
    s1 += k;
    s2 += k * k;
  }
  const double mean = s1 / nd;
  if (mean <= 0.0) {
    throw UndefinedStatisticError("arm " + std::to_string(arm) + ": zero mean, g2 undefined");
  }
  const double g2 = (s2 / nd - mean * mean) / (mean * mean) + 1.0;

  const std::uint64_t domain =
      arm == 1 ? stream_domain::kBootstrapArm1 : stream_domain::kBootstrapArm2;
  std::vector<double> reps(opts.resamples);
  const auto* shots = series.shots.data();
  detail::parallel_chunks(opts.resamples, opts.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t b = lo; b < hi; ++b) {
      Rng rng(opts.seed, domain, b);
      double r1 = 0.0;
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double k = shots[rng.next() % n][col];
        r1 += k;
        r2 += k * k;
      }
      const double m = r1 / nd;
      reps[b] = (r2 / nd - m * m) / (m * m) + 1.0;
    }
  });
  return {g2, replicate_sd(reps)};
}

ConditionalStats conditional_stats(const ShotSeries& series, int conditioning_arm,
                                   std::uint32_t m_cond, const BootstrapOptions& opts) {
  opts.validate();
  if (conditioning_arm != 1 && conditioning_arm != 2) {
    throw ValidationError("conditioning_arm: must be 1 or 2, got " +
                          std::to_string(conditioning_arm));
  }
  const std::size_t cond_col = static_cast<std::size_t>(conditioning_arm - 1);
  const std::size_t other_col = 1 - cond_col;
  std::vector<double> vals;
  for (const auto& shot : series.shots) {
    if (shot[cond_col] == m_cond) {
      vals.push_back(static_cast<double>(shot[other_col]));
    }
  }
  if (vals.size() < 2) {
    throw InsufficientStatisticsError(vals.size());
  }
  const std::size_t n = vals.size();
  const double nd = static_cast<double>(n);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : vals) {
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / nd;
  if (mean <= 0.0) {
    throw UndefinedStatisticError("conditional slice at m=" + std::to_string(m_cond) +
                                  ": zero mean, Fano factor undefined");
  }
  const double variance = s2 / nd - mean * mean;
  const double fano_hat = variance / mean;

  std::vector<double> rep_fano(opts.resamples);
  std::vector<double> rep_g2x(opts.resamples);
  detail::parallel_chunks(opts.resamples, opts.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t b = lo; b < hi; ++b) {
      const std::uint64_t stream = (static_cast<std::uint64_t>(m_cond) << 32) | b;
      Rng rng(opts.seed, stream_domain::kBootstrapConditional, stream);
      double r1 = 0.0;
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = vals[rng.next() % n];
        r1 += v;
        r2 += v * v;
      }
      const double m = r1 / nd;
      const double f = (r2 / nd - m * m) / m;
      rep_fano[b] = f;
      rep_g2x[b] = (f - 1.0) / m;
    }
  });

  ConditionalStats cs;
  cs.m_cond = m_cond;
  cs.n_selected = n;
  cs.mean = mean;
  cs.fano = {fano_hat, replicate_sd(rep_fano)};
  cs.g2_photons_excess = {(fano_hat - 1.0) / mean, replicate_sd(rep_g2x)};
  return cs;
}

double fano_conditional_model(double eta, double modes, double mean_m, std::uint32_t m_cond) {
  if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0) {
    throw ValidationError("eta: must be in (0, 1], got " + fmt_double(eta));
  }
  if (!std::isfinite(modes) || modes < 1.0) {
    throw ValidationError("modes: must be >= 1, got " + fmt_double(modes));
  }
  if (!std::isfinite(mean_m) || mean_m < 0.0) {
    throw ValidationError("mean_m: must be finite and >= 0, got " + fmt_double(mean_m));
  }
  if (eta == 1.0) return 0.0;
  if (mean_m == 0.0) return 1.0 - eta;
  // Posterior photon number given m_cond detections in the signal arm is
  // m_cond plus a negative binomial with modes + m_cond cells and success
  // parameter z; the idler then thins it with the same efficiency.
  const double nbar = mean_m / eta;
  const double q = nbar / (nbar + modes);
  const double z = q * (1.0 - eta);
  const double cells = modes + static_cast<double>(m_cond);
  const double w = z / (1.0 - z);
  const double mean_n = static_cast<double>(m_cond) + cells * w;
  const double var_n = cells * w / (1.0 - z);
  return (1.0 - eta) + eta * var_n / mean_n;
}

double g2_excess_from_fano(double fano, double mean) {
  if (!std::isfinite(fano)) {
    throw ValidationError("fano: must be finite");
  }
  if (!std::isfinite(mean) || mean <= 0.0) {
    throw ValidationError("mean: must be > 0, got " + fmt_double(mean));
  }
  return (fano - 1.0) / mean;
}

FitResult fit_detector_params(const std::vector<CurvePoint>& points, double mu_fixed) {
  if (!std::isfinite(mu_fixed) || mu_fixed < 1.0) {
    throw ValidationError("mu: must be >= 1, got " + fmt_double(mu_fixed));
  }
  if (points.size() < 3) {
    throw ValidationError("points: need at least 3 curve points, got " +
                          std::to_string(points.size()));
  }
  double k_max = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CurvePoint& p = points[i];
    if (!std::isfinite(p.k_mean) || p.k_mean <= 0.0) {
      throw ValidationError("points[" + std::to_string(i) + "].k_mean: must be > 0, got " +
                            fmt_double(p.k_mean));
    }
    if (!std::isfinite(p.g2)) {
      throw ValidationError("points[" + std::to_string(i) + "].g2: must be finite");
    }
    if (!std::isfinite(p.std_err) || p.std_err <= 0.0) {
      throw ValidationError("points[" + std::to_string(i) + "].std_err: must be > 0, got " +
                            fmt_double(p.std_err));
    }
    k_max = std::max(k_max, p.k_mean);
  }

  const auto chi2_at = [&points, mu_fixed](double eps, double dc) {
    double acc = 0.0;
    for (const CurvePoint& p : points) {
      const double r =
          (p.g2 - detail::g2_avalanche_multimode_unchecked(p.k_mean, mu_fixed, eps, dc)) /
          p.std_err;
      acc += r * r;
    }
    return acc;
  };

  // The two parameters trade off along a valley whose aspect ratio grows
  // with mu, which defeats any box search in the raw coordinates. Profiling
  // instead: the best epsilon at fixed dark count rate is a stiff,
  // well-behaved 1D problem; the profiled chi2 is then minimized over the
  // dark rate alone.
  const auto golden_min = [](auto f, double a, double b, int iters) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int t = 0; t < iters; ++t) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kInvPhi * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvPhi * (b - a);
        f2 = f(x2);
      }
    }
    return f1 <= f2 ? x1 : x2;
  };

  const auto eps_argmin = [&](double dc) {
    double coarse_e = 0.0;
    double coarse_chi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 197; ++i) {
      const double e = 0.98 * static_cast<double>(i) / 196.0;
      const double c = chi2_at(e, dc);
      if (c < coarse_chi) {
        coarse_chi = c;
        coarse_e = e;
      }
    }
    const double lo = std::max(0.0, coarse_e - 0.01);
    const double hi = std::min(0.98, coarse_e + 0.01);
    return golden_min([&](double e) { return chi2_at(e, dc); }, lo, hi, 120);
  };
  const auto profiled_chi2 = [&](double dc) { return chi2_at(eps_argmin(dc), dc); };

  // Dark rate scan: exact zero, then a log grid spanning nine decades below
  // ten times the largest mean on the curve.
  double best_d = 0.0;
  double best_phi = profiled_chi2(0.0);
  std::vector<double> d_grid(200);
  int j_best = -1;
  double phi_grid_best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 200; ++j) {
    d_grid[j] = k_max * std::pow(10.0, -9.0 + 10.0 * static_cast<double>(j) / 199.0);
    const double p = profiled_chi2(d_grid[j]);
    if (p < phi_grid_best) {
      phi_grid_best = p;
      j_best = j;
    }
  }
  if (phi_grid_best < best_phi) {
    const double lo = j_best == 0 ? 0.0 : d_grid[j_best - 1];
    const double hi = j_best == 199 ? d_grid[199] : d_grid[j_best + 1];
    best_d = golden_min(profiled_chi2, lo, hi, 150);
    best_phi = profiled_chi2(best_d);
    if (profiled_chi2(0.0) <= best_phi) best_d = 0.0;
  }
  const double best_e = eps_argmin(best_d);

  FitResult fit;
  fit.epsilon = best_e;
  fit.dark_mean = best_d;
  fit.chi2 = chi2_at(best_e, best_d);
  fit.mu_fixed = mu_fixed;
  fit.n_points = static_cast<std::uint32_t>(points.size());

  double rss = 0.0;
  for (const CurvePoint& p : points) {
    const double r =
        p.g2 - detail::g2_avalanche_multimode_unchecked(p.k_mean, mu_fixed, best_e, best_d);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(points.size()));

  // Errors from the chi2 curvature: cov = 2 H^-1.
  const double s_e = 1e-5;
  const double s_d = 1e-5 * std::max(1.0, k_max);
  const double c0 = fit.chi2;
  const double h_ee =
      (chi2_at(best_e + s_e, best_d) - 2.0 * c0 + chi2_at(best_e - s_e, best_d)) / (s_e * s_e);
  const double h_dd =
      (chi2_at(best_e, best_d + s_d) - 2.0 * c0 + chi2_at(best_e, best_d - s_d)) / (s_d * s_d);
  const double h_ed = (chi2_at(best_e + s_e, best_d + s_d) - chi2_at(best_e + s_e, best_d - s_d) -
                       chi2_at(best_e - s_e, best_d + s_d) + chi2_at(best_e - s_e, best_d - s_d)) /
                      (4.0 * s_e * s_d);
  const double det = h_ee * h_dd - h_ed * h_ed;
  if (det > 0.0 && h_ee > 0.0 && h_dd > 0.0) {
    fit.epsilon_err = std::sqrt(2.0 * h_dd / det);
    fit.dark_err = std::sqrt(2.0 * h_ee / det);
  } else {
    fit.epsilon_err =
        h_ee > 0.0 ? std::sqrt(2.0 / h_ee) : std::numeric_limits<double>::infinity();
    fit.dark_err = h_dd > 0.0 ? std::sqrt(2.0 / h_dd) : std::numeric_limits<double>::infinity();
  }
  return fit;
}

}  // namespace twinsipm
