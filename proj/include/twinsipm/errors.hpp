#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twinsipm {

// Bad arguments, bad configuration, malformed input files. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Data-dependent failures discovered while computing. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistic whose defining ratio has a zero denominator (e.g. g2 of an
// all-zero record).
class UndefinedStatisticError : public DataError {
 public:
  using DataError::DataError;
};

// g2 of the difference signal blows up when the mean difference is
// consistent with zero. Carries the moments so callers can report them.
class DivergentStatisticError : public DataError {
 public:
  DivergentStatisticError(double diff_mean, double sum_mean, double second_moment)
      : DataError("diff_mean: |mean(k1-k2)| is below 1e-9 * sum mean, g2 of the "
                  "difference diverges (diff_mean=" +
                  std::to_string(diff_mean) + ", sum_mean=" + std::to_string(sum_mean) + ")"),
        diff_mean_(diff_mean),
        sum_mean_(sum_mean),
        second_moment_(second_moment) {}

  double diff_mean() const { return diff_mean_; }
  double sum_mean() const { return sum_mean_; }
  double second_moment() const { return second_moment_; }

 private:
  double diff_mean_;
  double sum_mean_;
  double second_moment_;
};

// A conditional slice with too few shots to form the requested statistic.
class InsufficientStatisticsError : public DataError {
 public:
  explicit InsufficientStatisticsError(std::size_t n_selected)
      : DataError("conditional slice holds " + std::to_string(n_selected) +
                  " shot(s), need at least 2"),
        n_selected_(n_selected) {}

  std::size_t n_selected() const { return n_selected_; }

 private:
  std::size_t n_selected_;
};

// An analog sample that does not sit close enough to an integer multiple of
// the gain to be binned.
class AmbiguousBinError : public DataError {
 public:
  AmbiguousBinError(double x, double gain)
      : DataError("analog value " + std::to_string(x) + " is farther than 0.25 bins from an "
                  "integer count at gain " + std::to_string(gain)),
        x_(x),
        gain_(gain) {}

  double x() const { return x_; }
  double gain() const { return gain_; }

 private:
  double x_;
  double gain_;
};

}  // namespace twinsipm
