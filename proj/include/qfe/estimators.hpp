#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfe/model.hpp"

namespace qfe {

struct EstimationFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Estimate {
    double omega_hat;             // in [0, 1]
    std::string method;
    std::optional<double> log_likelihood;  // at the optimum, when applicable
    std::optional<int> peak_index;         // spectrum peak bin, Fourier only
};

/// Log-likelihood of a record at a single frequency.
double record_log_likelihood(const Record& record, double omega, double eta, double t2);

/// Maximum likelihood estimate by coarse grid scan plus local refinement.
///
/// The scan uses kScanPoints nodes over (0, 1). When the schedule contains
/// times too long for that density (oscillation scale ~1/t_max), the scan
/// proceeds coarse-to-fine: each stage only includes measurements whose
/// likelihood the current grid resolves, then zooms into the best bracket.
/// Ties break toward smaller omega.
Estimate mle(const Record& record, double eta, double t2);

/// Fourier peak estimate for records on a uniform time grid t_k = k dt.
/// Mean-subtracts the outcomes, takes the DFT, picks the power peak over
/// positive frequencies and refines it by quadratic interpolation on log
/// power; omega_hat = 2 pi f_peak, clamped to [0, 1].
Estimate fourier_estimate(const Record& record);

/// Posterior mean under a uniform prior via the exact grid posterior.
Estimate bayes_mean(const Record& record, double eta, double t2);

/// Precomputed per-schedule scan tables for repeated estimation on the same
/// schedule; the Monte Carlo harness uses this to avoid re-evaluating
/// log-likelihood tables for every trial.
class MleScanner {
public:
    static constexpr int kScanPoints = 10000;

    MleScanner(const Eigen::ArrayXd& times, double eta, double t2);

    /// MLE for one outcome vector (same schedule as construction).
    Estimate solve(const std::vector<int>& outcomes) const;

    /// Posterior-mean estimate from the same tables.
    Estimate solve_bayes(const std::vector<int>& outcomes) const;

    const Eigen::ArrayXd& grid() const { return grid_; }

private:
    Eigen::ArrayXd times_;
    double eta_, t2_;
    Eigen::ArrayXd grid_;
    // log-likelihood tables, one row per measurement time
    Eigen::MatrixXd log_lik0_, log_lik1_;
    bool needs_zoom_;

    friend Estimate mle(const Record&, double, double);
};

} // namespace qfe
