#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfe/strategies.hpp"

namespace qfe {

/// Noise parameters shared by all trials of a plan; the true frequency is
/// drawn uniformly from (0, 1) per trial.
struct ModelFamily {
    double eta = 1.0;
    double t2 = kInfiniteT2;
};

/// More than kMaxFailureFraction of a cell's trials failed to estimate.
struct CellFailureError : std::runtime_error {
    int failures;
    int trials;
    CellFailureError(int failures_, int trials_)
        : std::runtime_error("estimation failures exceeded 1% of trials"),
          failures(failures_), trials(trials_) {}
};

struct RiskPoint {
    double mean;
    double stderr_val;  // sample std / sqrt(trials)
    double median;      // diagnostic; squared error is heavy-tailed at small N
    int failures;
    int trials;
};

inline constexpr double kMaxFailureFraction = 0.01;

/// Monte Carlo Bayes risk of (strategy, estimator) at N measurements.
/// Trial k draws omega* and outcomes from stream (seed, k), so results are
/// bit-identical whether trials run serially or across threads.
RiskPoint estimate_bayes_risk(const StrategySpec& spec, EstimatorKind estimator,
                              int n, const ModelFamily& family, int trials,
                              std::uint64_t seed, int threads = 0);

struct StrategyBinding {
    StrategySpec spec;         // spec.n is a placeholder; the plan's n_values apply
    EstimatorKind estimator;
};

struct ExperimentPlan {
    std::vector<StrategyBinding> strategies;
    std::vector<int> n_values = default_n_values();
    int trials = 10000;
    double eta = 1.0;
    double t2 = kInfiniteT2;
    std::uint64_t seed = 0;
    int threads = 0;

    static std::vector<int> default_n_values();  // 16, 20, ..., 124
    void validate() const;
};

struct RiskRow {
    std::string strategy;
    std::string estimator;
    int n;
    double risk_mean, risk_stderr, risk_median;
    int failures;
    bool cell_failed;  // > 1% failures; risk fields are NaN
    double crb;        // NaN for outcome-dependent (adaptive) schedules
    double crb_sharp;  // NaN for adaptive
    double crb_ultimate;  // 0 when T2 is infinite (bound degenerates)
    double floor;
};

struct RiskCurve {
    std::vector<RiskRow> rows;
    int failed_cells = 0;
};

RiskCurve run_plan(const ExperimentPlan& plan);

struct DecayFit {
    double slope;
    double intercept;
    double r2;
    int points;
};

/// Least-squares fit of ln(risk): against N for the adaptive strategy,
/// against ln(N) for offline strategies. Non-positive and failed cells are
/// excluded. Optionally restricted to n in [n_min, n_max].
DecayFit fit_decay(const RiskCurve& curve, const std::string& strategy_label,
                   int n_min = 0, int n_max = 1 << 30);

} // namespace qfe
