#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qfe/belief.hpp"
#include "qfe/estimators.hpp"
#include "qfe/model.hpp"

namespace qfe {

enum class StrategyKind { Fixed, LinearGrid, Exponential, AdaptiveGaussian };

enum class EstimatorKind { Mle, Fourier, BayesMean, PosteriorMean, OracleTruth };

std::string to_string(StrategyKind k);
std::string to_string(EstimatorKind k);

struct StrategySpec {
    StrategyKind kind;
    int n;                         // number of measurements
    double exp_base = 9.0 / 8.0;   // Exponential only, must be > 1
    int warmup_len = 15;           // AdaptiveGaussian only, must be >= 1

    StrategySpec(StrategyKind kind_, int n_, double exp_base_ = 9.0 / 8.0,
                 int warmup_len_ = 15);
};

/// Default estimator bound to each strategy family: offline schedules use the
/// MLE, the adaptive controller reads out its posterior mean.
EstimatorKind default_estimator(StrategyKind kind);

/// Offline measurement times. Fixed -> pi repeated, LinearGrid -> k pi,
/// Exponential(b) -> b^k for k = 1..N. Throws for adaptive specs.
Eigen::ArrayXd schedule(const StrategySpec& spec);

/// Sequential state of the adaptive controller. The grid posterior carries
/// the warm-up phase (and any degenerate-belief fallback); the Gaussian
/// belief carries the tracking phase.
struct AdaptiveState {
    enum class Phase { Warmup, Tracking };

    Phase phase = Phase::Warmup;
    GridPosterior grid;
    GaussianBelief belief{0.5, 1.0 / 12.0};
    Record history;
    int grid_steps = 0;   // measurements taken on the t = k pi ladder
    int warmup_len = 15;

    explicit AdaptiveState(int warmup_len_ = 15,
                           int grid_nodes = GridPosterior::kDefaultNodes);
};

/// Next measurement time chosen by the controller: the k pi ladder during
/// warm-up, the k-th achievable risk minimum during tracking, and the ladder
/// again whenever the Gaussian belief is degenerate (mu < 5 sigma or the k
/// mapping is unusable).
double next_time(const AdaptiveState& state, double eta, double t2);

/// Advances the state with one measurement outcome (Bayes update plus the
/// one-time Warmup -> Tracking transition at index warmup_len).
void adaptive_step(AdaptiveState& state, const Measurement& m, double eta, double t2);

struct TrialResult {
    Record record;
    double estimate;
};

/// Reusable per-(spec, eta, t2) trial executor. Precomputes warm-up
/// likelihood tables and estimator scan tables so Monte Carlo sweeps do not
/// rebuild them per trial. Thread-safe for concurrent run() calls.
class TrialRunner {
public:
    TrialRunner(const StrategySpec& spec, double eta, double t2,
                std::optional<EstimatorKind> estimator = std::nullopt);
    ~TrialRunner();
    TrialRunner(const TrialRunner&) = delete;
    TrialRunner& operator=(const TrialRunner&) = delete;

    TrialResult run(const TrueModel& model, RngStream& rng) const;

    const StrategySpec& spec() const { return spec_; }
    EstimatorKind estimator() const { return estimator_; }

private:
    StrategySpec spec_;
    double eta_, t2_;
    EstimatorKind estimator_;
    Eigen::ArrayXd offline_times_;
    std::unique_ptr<MleScanner> scanner_;
    // warm-up ladder likelihood tables, one entry per t = k pi
    std::vector<Eigen::ArrayXd> warm_lik0_, warm_lik1_;
    Eigen::ArrayXd warm_nodes_;

    TrialResult run_offline(const TrueModel& model, RngStream& rng) const;
    TrialResult run_adaptive(const TrueModel& model, RngStream& rng) const;
};

/// Single-shot trial: deterministic in (spec, model, seed).
TrialResult run_trial(const StrategySpec& spec, const TrueModel& model,
                      std::uint64_t seed);

struct BaseOptimization {
    double best_base;
    std::vector<double> bases;
    std::vector<double> risks;
    std::vector<double> stderrs;
};

/// Offline search for the exponential-schedule base: Monte Carlo Bayes risk
/// at N measurements per candidate base, common random numbers across bases,
/// ties broken toward the smaller base.
BaseOptimization optimize_exponential_base(int n, double eta, double t2,
                                           const std::vector<double>& base_grid,
                                           int trials, std::uint64_t seed,
                                           int threads = 0);

} // namespace qfe
