#include "qatm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qatm/error.hpp"
#include "qatm/parallel.hpp"

namespace qatm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TrialScores {
  std::vector<double> matched;    // entry 0 is the genuine score
  std::vector<double> unmatched;  // all imposters
};

TrialScores draw_trial(const CalibrationConfig& cfg, std::size_t trial) {
  std::mt19937_64 rng(trial_seed(cfg.rng_seed, trial));
  std::normal_distribution<double> genuine(cfg.mu_plus, cfg.sigma_plus);
  std::normal_distribution<double> imposter(cfg.mu_minus, cfg.sigma_minus);
  auto draw = [&](std::normal_distribution<double>& d) {
    // std::normal_distribution rejects sigma == 0.
    return d.stddev() > 0.0 ? d(rng) : d.mean();
  };
  TrialScores s;
  s.matched.resize(cfg.n_patches);
  s.unmatched.resize(cfg.n_patches);
  s.matched[0] = draw(genuine);
  for (std::size_t i = 1; i < cfg.n_patches; ++i) s.matched[i] = draw(imposter);
  for (std::size_t i = 0; i < cfg.n_patches; ++i) s.unmatched[i] = draw(imposter);
  return s;
}

// Softmax probability of the score `pick`; peak is the largest score.
double softmax_entry(const std::vector<double>& scores, double alpha, double peak, double pick) {
  double sum = 0.0;
  for (double v : scores) sum += std::exp(alpha * (v - peak));
  return std::exp(alpha * (pick - peak)) / sum;
}

struct TrialCurve {
  std::vector<double> matched;    // L+ per alpha
  std::vector<double> unmatched;  // max L- per alpha
};

TrialCurve evaluate_trial(const CalibrationConfig& cfg, std::size_t trial, const std::vector<double>& alphas) {
  const TrialScores s = draw_trial(cfg, trial);
  const double peak_m = *std::max_element(s.matched.begin(), s.matched.end());
  const double peak_u = *std::max_element(s.unmatched.begin(), s.unmatched.end());
  TrialCurve c;
  c.matched.reserve(alphas.size());
  c.unmatched.reserve(alphas.size());
  for (double a : alphas) {
    c.matched.push_back(softmax_entry(s.matched, a, peak_m, s.matched[0]));
    c.unmatched.push_back(softmax_entry(s.unmatched, a, peak_u, peak_u));
  }
  return c;
}

std::vector<CurvePoint> simulate_curve(const CalibrationConfig& cfg, const std::vector<double>& alphas) {
  std::vector<TrialCurve> trials(cfg.n_trials);
  parallel_for(0, cfg.n_trials, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) trials[t] = evaluate_trial(cfg, t, alphas);
  });

  const double n = static_cast<double>(cfg.n_trials);
  std::vector<CurvePoint> curve(alphas.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    double sum_p = 0.0, sum_u = 0.0, max_u = 0.0;
    for (const auto& t : trials) {
      sum_p += t.matched[k];
      sum_u += t.unmatched[k];
      max_u = std::max(max_u, t.unmatched[k]);
    }
    const double mean_p = sum_p / n;
    const double mean_u = sum_u / n;
    double ss_p = 0.0, ss_u = 0.0;
    for (const auto& t : trials) {
      ss_p += (t.matched[k] - mean_p) * (t.matched[k] - mean_p);
      ss_u += (t.unmatched[k] - mean_u) * (t.unmatched[k] - mean_u);
    }
    const double var_p = n > 1 ? ss_p / (n - 1) : 0.0;
    const double var_u = n > 1 ? ss_u / (n - 1) : 0.0;

    CurvePoint& p = curve[k];
    p.alpha = alphas[k];
    p.mean_matched = mean_p;
    p.max_unmatched = cfg.estimator == UnmatchedEstimator::kMaxOverTrials ? max_u : mean_u;
    p.discernibility = p.mean_matched - p.max_unmatched;
    p.std_error = std::sqrt((var_p + var_u) / n);
  }
  return curve;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
  return splitmix64(seed ^ splitmix64(trial));
}

void CalibrationConfig::validate() const {
  if (n_patches < 2) throw InvalidArgument("calibration needs at least two patches");
  if (n_trials < 1) throw InvalidArgument("calibration needs at least one trial");
  if (!(sigma_plus >= 0.0) || !(sigma_minus >= 0.0)) throw InvalidArgument("standard deviations must be >= 0");
  if (!std::isfinite(mu_plus) || !std::isfinite(mu_minus)) throw InvalidArgument("means must be finite");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0) || !std::isfinite(alpha_grid[i])) throw InvalidArgument("alpha grid values must be positive");
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) throw InvalidArgument("alpha grid must be strictly increasing");
  }
}

std::vector<double> CalibrationConfig::make_alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo > 0.0) || hi < lo) throw InvalidArgument("bad alpha grid bounds");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

double simulate_discernibility(const CalibrationConfig& cfg, double alpha) {
  cfg.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive and finite");
  return simulate_curve(cfg, {alpha}).front().discernibility;
}

CalibrationResult calibrate_alpha(const CalibrationConfig& cfg) {
  cfg.validate();
  if (cfg.alpha_grid.empty()) throw InvalidArgument("alpha grid is empty");
  CalibrationResult r;
  r.curve = simulate_curve(cfg, cfg.alpha_grid);
  auto best = std::max_element(r.curve.begin(), r.curve.end(),
                               [](const CurvePoint& a, const CurvePoint& b) { return a.discernibility < b.discernibility; });
  r.alpha_star = best->alpha;
  return r;
}

bool is_unimodal(const CalibrationResult& result, double n_se) {
  const auto& c = result.curve;
  if (c.size() < 3) return true;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i].discernibility > c[peak].discernibility) peak = i;
  }
  // Left of the peak the curve should rise: no point may sit more than
  // n_se errors below an earlier point. Mirror image on the right.
  double running = c[0].discernibility;
  for (std::size_t i = 1; i <= peak; ++i) {
    if (c[i].discernibility < running - n_se * std::max(c[i].std_error, 1e-15)) return false;
    running = std::max(running, c[i].discernibility);
  }
  running = c.back().discernibility;
  for (std::size_t i = c.size() - 1; i-- > peak;) {
    if (c[i].discernibility < running - n_se * std::max(c[i].std_error, 1e-15)) return false;
    running = std::max(running, c[i].discernibility);
  }
  return true;
}

}  // namespace qatm
