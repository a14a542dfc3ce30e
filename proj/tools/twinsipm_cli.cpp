#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twinsipm/analysis.hpp"
#include "twinsipm/errors.hpp"
#include "twinsipm/io.hpp"
#include "twinsipm/simulate.hpp"
#include "twinsipm/version.hpp"

namespace {

using namespace twinsipm;

struct SourceCliOptions {
  std::uint64_t shots = 0;
  std::int64_t modes = 1;
  double eta1 = 1.0;
  double eta2 = 1.0;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double dark1 = 0.0;
  double dark2 = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Shared source/detector flags of `simulate` and `sweep`.
void add_source_options(CLI::App* cmd, SourceCliOptions& o) {
  cmd->add_option("--shots", o.shots, "number of gated exposures")->required();
  cmd->add_option("--modes", o.modes, "number of thermal modes")->required();
  cmd->add_option("--eta1", o.eta1, "detection efficiency, arm 1")->required();
  cmd->add_option("--eta2", o.eta2, "detection efficiency, arm 2")->required();
  cmd->add_option("--epsilon1", o.epsilon1, "cross-talk probability, arm 1");
  cmd->add_option("--epsilon2", o.epsilon2, "cross-talk probability, arm 2");
  cmd->add_option("--dark1", o.dark1, "mean dark counts per gate, arm 1");
  cmd->add_option("--dark2", o.dark2, "mean dark counts per gate, arm 2");
  cmd->add_option("--seed", o.seed, "RNG seed")->required();
  cmd->add_option("--threads", o.threads, "worker threads");
}

TwbParams make_params(const SourceCliOptions& o, double mean_n, double gain) {
  TwbParams p;
  p.modes = o.modes;
  p.mean_n = mean_n;
  p.det1 = DetectorConfig{o.eta1, o.epsilon1, o.dark1, gain};
  p.det2 = DetectorConfig{o.eta2, o.epsilon2, o.dark2, gain};
  return p;
}

void emit_json(const nlohmann::ordered_json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_json(path, doc);
  }
}

std::string tsv_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void run_simulate(const SourceCliOptions& src, double mean_n, const std::string& out,
                  double gamma, const std::string& analog_out) {
  const TwbParams params = make_params(src, mean_n, gamma > 0.0 ? gamma : 1.0);
  const ShotSeries series = sample_twb(params, src.shots, src.seed, src.threads);
  write_shot_csv(out, series);
  if (!analog_out.empty()) {
    write_analog_csv(analog_out, series, gamma, gamma);
  }
}

struct AnalyzeCliOptions {
  std::string in;
  std::string report_out;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t resamples = 1000;
  unsigned threads = 1;
  int condition_arm = 0;
  std::string m_cond_range;
};

std::optional<ConditionalRequest> parse_conditional(int arm, const std::string& range) {
  if (arm == 0 && range.empty()) return std::nullopt;
  if (arm == 0 || range.empty()) {
    throw ValidationError("--condition-arm and --m-cond-range must be given together");
  }
  ConditionalRequest req;
  req.arm = arm;
  unsigned lo = 0;
  unsigned hi = 0;
  char trailing = 0;
  if (std::sscanf(range.c_str(), "%u:%u%c", &lo, &hi, &trailing) != 2) {
    throw ValidationError("--m-cond-range: expected 'LO:HI', got '" + range + "'");
  }
  if (hi < lo) {
    throw ValidationError("--m-cond-range: HI must be >= LO, got '" + range + "'");
  }
  if (hi - lo > 10000) {
    throw ValidationError("--m-cond-range: spans more than 10000 slices");
  }
  req.m_lo = lo;
  req.m_hi = hi;
  return req;
}

void run_analyze(const AnalyzeCliOptions& o) {
  const ShotSeries series =
      o.gamma > 0.0 ? read_analog_csv(o.in, o.gamma, o.gamma) : read_shot_csv(o.in);
  BootstrapOptions opts;
  opts.resamples = o.resamples;
  opts.seed = o.seed;
  opts.threads = o.threads;
  const auto cond = parse_conditional(o.condition_arm, o.m_cond_range);
  emit_json(analysis_report_json(series, opts, cond), o.report_out);
}

void run_fit(const std::string& curve_path, double mu, const std::string& out) {
  const std::vector<CurvePoint> points = read_curve_csv(curve_path);
  const FitResult fit = fit_detector_params(points, mu);
  emit_json(fit_report_json(fit), out);
}

void run_sweep(const SourceCliOptions& src, const std::vector<double>& mean_n_list,
               std::uint32_t resamples, const std::string& out, double fit_mu,
               const std::string& fit_out) {
  if (mean_n_list.empty()) {
    throw ValidationError("--mean-n-list: must contain at least one value");
  }
  std::ofstream tsv(out, std::ios::binary);
  if (!tsv) {
    throw ValidationError("path: cannot open '" + out + "' for writing");
  }
  tsv << "mean_n\tarm\tk_mean\tg2\tg2_stderr\tnrf\tnrf_stderr\tg2_diff_detected\t"
         "g2_diff_detected_stderr\tg2_diff_photons_excess\tg2_diff_photons_excess_stderr\n";

  std::vector<CurvePoint> curve1;
  std::vector<CurvePoint> curve2;
  for (std::size_t i = 0; i < mean_n_list.size(); ++i) {
    const TwbParams params = make_params(src, mean_n_list[i], 1.0);
    const std::uint64_t point_seed = src.seed + i;
    const ShotSeries series = sample_twb(params, src.shots, point_seed, src.threads);
    BootstrapOptions opts;
    opts.resamples = resamples;
    opts.seed = point_seed;
    opts.threads = src.threads;
    const CorrelationStats cs = correlation_stats(series, opts);
    for (int arm = 1; arm <= 2; ++arm) {
      const ValueWithError g2 = arm_g2(series, arm, opts);
      const double k_mean = arm == 1 ? cs.mean1 : cs.mean2;
      (arm == 1 ? curve1 : curve2).push_back({k_mean, g2.value, g2.std_err});
      tsv << tsv_num(mean_n_list[i]) << '\t' << arm << '\t' << tsv_num(k_mean) << '\t'
          << tsv_num(g2.value) << '\t' << tsv_num(g2.std_err) << '\t' << tsv_num(cs.nrf.value)
          << '\t' << tsv_num(cs.nrf.std_err) << '\t' << tsv_num(cs.g2_diff_detected.value)
          << '\t' << tsv_num(cs.g2_diff_detected.std_err) << '\t'
          << tsv_num(cs.g2_diff_photons_excess.value) << '\t'
          << tsv_num(cs.g2_diff_photons_excess.std_err) << '\n';
    }
  }
  tsv.close();
  if (!tsv) {
    throw ValidationError("path: failed writing '" + out + "'");
  }

  if (fit_mu > 0.0) {
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (int arm = 1; arm <= 2; ++arm) {
      const FitResult fit = fit_detector_params(arm == 1 ? curve1 : curve2, fit_mu);
      nlohmann::ordered_json doc = fit_report_json(fit);
      doc["fit"]["arm"] = arm;
      fits.push_back(doc["fit"]);
    }
    nlohmann::ordered_json report{
        {"schema_version", 1},
        {"metadata", nlohmann::ordered_json{{"tool_version", kVersion}}},
        {"fits", fits}};
    emit_json(report, fit_out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twin-beam SiPM photon statistics: simulate, analyze, fit, sweep"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a twin-beam shot record and write it as CSV");
  SourceCliOptions sim_src;
  double sim_mean_n = 0.0;
  std::string sim_out;
  double sim_gamma = 0.0;
  std::string sim_analog_out;
  add_source_options(sim, sim_src);
  sim->add_option("--mean-n", sim_mean_n, "mean photon number per arm")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();
  auto* gamma_opt = sim->add_option("--gamma", sim_gamma, "analog gain per avalanche");
  sim->add_option("--analog-out", sim_analog_out, "also write an analog CSV at this path")
      ->needs(gamma_opt);
  sim->callback([&] { run_simulate(sim_src, sim_mean_n, sim_out, sim_gamma, sim_analog_out); });

  // analyze
  auto* ana = app.add_subcommand("analyze", "compute the statistics report of a shot record");
  AnalyzeCliOptions ana_opts;
  ana->add_option("--in", ana_opts.in, "input CSV path")->required();
  ana->add_option("--gamma", ana_opts.gamma,
                  "input is analog with this gain; values are binned to counts");
  ana->add_option("--report-out", ana_opts.report_out, "report JSON path (default: stdout)");
  ana->add_option("--seed", ana_opts.seed, "bootstrap RNG seed")->required();
  ana->add_option("--resamples", ana_opts.resamples, "bootstrap resamples");
  ana->add_option("--threads", ana_opts.threads, "worker threads");
  ana->add_option("--condition-arm", ana_opts.condition_arm,
                  "conditioning arm for conditional slices (1 or 2)");
  ana->add_option("--m-cond-range", ana_opts.m_cond_range,
                  "conditioning count range LO:HI (inclusive)");
  ana->callback([&] { run_analyze(ana_opts); });

  // fit
  auto* fit = app.add_subcommand("fit", "fit cross-talk and dark counts to a g2 curve");
  std::string fit_curve;
  double fit_mu = 0.0;
  std::string fit_out;
  fit->add_option("--curve", fit_curve, "curve CSV path (k_mean,g2,stderr)")->required();
  fit->add_option("--mu", fit_mu, "fixed mode number")->required();
  fit->add_option("--out", fit_out, "fit JSON path (default: stdout)");
  fit->callback([&] { run_fit(fit_curve, fit_mu, fit_out); });

  // sweep
  auto* sweep = app.add_subcommand(
      "sweep", "simulate and analyze a series of source intensities, optionally fitting");
  SourceCliOptions sweep_src;
  std::vector<double> sweep_means;
  std::uint32_t sweep_resamples = 1000;
  std::string sweep_out;
  double sweep_fit_mu = 0.0;
  std::string sweep_fit_out;
  add_source_options(sweep, sweep_src);
  sweep->add_option("--mean-n-list", sweep_means, "comma-separated mean photon numbers")
      ->required()
      ->delimiter(',');
  sweep->add_option("--resamples", sweep_resamples, "bootstrap resamples");
  sweep->add_option("--out", sweep_out, "output TSV path")->required();
  auto* fit_mu_opt =
      sweep->add_option("--fit-mu", sweep_fit_mu, "fit the per-arm g2 curves at this mode number");
  sweep->add_option("--fit-out", sweep_fit_out, "fit JSON path (default: stdout)")
      ->needs(fit_mu_opt);
  sweep->callback([&] {
    run_sweep(sweep_src, sweep_means, sweep_resamples, sweep_out, sweep_fit_mu, sweep_fit_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
