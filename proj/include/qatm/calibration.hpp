#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qatm {

/// How max{L-} is estimated from the simulated unmatched likelihoods.
enum class UnmatchedEstimator {
  /// Largest unmatched likelihood seen over every trial.
  kMaxOverTrials,
  /// Largest unmatched likelihood within each trial, averaged over trials.
  kMeanOfTrialMax,
};

/// Monte-Carlo model of one search patch scored against n_patches template
/// patches. Matched and unmatched similarity scores are drawn from normal
/// distributions with the given means and standard deviations.
struct CalibrationConfig {
  std::size_t n_patches = 2200;
  double mu_plus = 0.3;
  double sigma_plus = 0.1;
  double mu_minus = 0.0;
  double sigma_minus = 0.05;
  std::size_t n_trials = 200;
  std::vector<double> alpha_grid = make_alpha_grid(1.0, 60.0, 0.5);
  std::uint64_t rng_seed = 0;
  UnmatchedEstimator estimator = UnmatchedEstimator::kMaxOverTrials;

  void validate() const;

  /// lo, lo + step, ... up to and including hi (within half a step).
  static std::vector<double> make_alpha_grid(double lo, double hi, double step);
};

struct CurvePoint {
  double alpha = 0.0;
  double discernibility = 0.0;  // mean_matched - max_unmatched
  double mean_matched = 0.0;    // E[L+]
  double max_unmatched = 0.0;   // max{L-}
  double std_error = 0.0;       // Monte-Carlo standard error of discernibility
};

struct CalibrationResult {
  double alpha_star = 0.0;
  std::vector<CurvePoint> curve;
};

/// E[L+] - max{L-} at one temperature. Trial i always draws from the same
/// sub-seed, so this agrees exactly with the corresponding curve point.
double simulate_discernibility(const CalibrationConfig& cfg, double alpha);

/// Evaluates the whole grid; alpha_star is the first grid value attaining
/// the maximum.
CalibrationResult calibrate_alpha(const CalibrationConfig& cfg);

/// True when, walking from either end of the grid towards the peak, the curve
/// never drops below its running maximum by more than n_se standard errors.
bool is_unimodal(const CalibrationResult& result, double n_se = 3.0);

/// Deterministic per-trial seed derived from the run seed (splitmix64 mixing).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

}  // namespace qatm
