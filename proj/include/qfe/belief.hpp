#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>

#include "qfe/model.hpp"

namespace qfe {

/// Raised when a Bayes update or quadrature produces an unusable posterior
/// (all-zero likelihood, vanishing normalisation).
struct DegeneratePosteriorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Gaussian summary (mu, sigma^2) of the posterior over omega.
/// The variance is clamped at kSigma2Floor; `clamped` records that the floor
/// was hit so downstream code can treat the belief as saturated.
struct GaussianBelief {
    double mu;
    double sigma2;
    bool clamped = false;

    static constexpr double kSigma2Floor = 1e-30;
};

/// Discretised posterior over a sub-interval [lo, hi] of (0, 1).
///
/// `weights` are density values at strictly increasing interior nodes;
/// integrals are trapezoidal across the nodes plus end slivers that extend
/// the boundary density values to lo and hi, so a constant density of 1 on
/// the default full grid integrates to exactly 1.
class GridPosterior {
public:
    static constexpr int kDefaultNodes = 10000;

    /// Uniform prior on (0, 1) with n interior nodes at (i + 1/2) / n.
    static GridPosterior uniform(int n = kDefaultNodes);

    /// Uniform prior restricted to [lo, hi]; used for zoomed refinements.
    static GridPosterior uniform_window(double lo, double hi, int n);

    GridPosterior(Eigen::ArrayXd nodes, Eigen::ArrayXd weights, double lo, double hi);

    const Eigen::ArrayXd& nodes() const { return nodes_; }
    const Eigen::ArrayXd& weights() const { return weights_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// Integral of f(omega) against the posterior density (f given at nodes).
    double integrate(const Eigen::ArrayXd& f_at_nodes) const;

    double total_mass() const;
    void normalize();

    /// Posterior mass outside [a, b]; used to judge the Gaussian approximation.
    double mass_outside(double a, double b) const;

    /// Multiplies in per-node likelihood values and renormalises.
    void apply_likelihood(const Eigen::ArrayXd& lik_at_nodes);

    std::pair<double, double> moments() const;  // (mean, variance)

private:
    Eigen::ArrayXd nodes_;
    Eigen::ArrayXd weights_;
    double lo_, hi_;
};

/// Expected risk of measuring next at time t under a Gaussian belief.
struct ExpectedRisk {
    double t;
    double risk;      // expected posterior variance r(t)
    double envelope;  // E(t, sigma^2), lower bound on r
};

/// Bayes update of the grid posterior with one measurement.
GridPosterior grid_update(const GridPosterior& post, const Measurement& m,
                          double eta, double t2);

std::pair<double, double> grid_moments(const GridPosterior& post);

/// Pr(d | t; mu, sigma^2) marginalised over the Gaussian belief
/// (noiseless likelihood): 1/2 + (1-2d)/2 cos(mu t) exp(-sigma^2 t^2 / 2).
double marginal_outcome_prob(const GaussianBelief& b, int d, double t);

/// Posterior mean and variance given outcome d at an arbitrary time t for the
/// eta = 1 model with dephasing time t2 (infinite for noiseless), together
/// with the marginal outcome probability. Real-valued closed form.
struct OutcomeMoments {
    double prob;
    double mean;
    double var;
};
OutcomeMoments posterior_moments(const GaussianBelief& b, int d, double t,
                                 double t2 = kInfiniteT2);

/// Expected next-measurement posterior variance r(t) and its envelope
/// E(t, sigma^2) = sigma^2 (1 - t^2 sigma^2 exp(-t^2 sigma^2)).
ExpectedRisk expected_posterior_variance(const GaussianBelief& b, double t);

double risk_envelope(double t, double sigma2);

/// Envelope-minimising time: 1/sigma noiseless, and
/// 2 T2 / (1 + sqrt(1 + 4 sigma^2 T2^2)) with dephasing (saturates at T2).
double envelope_minimizer_time(double sigma2, double t2 = kInfiniteT2);

/// Index of the achievable risk minimum nearest the envelope minimum;
/// the implied measurement time is (2k - 1) pi / (2 mu).
int controller_k(double mu, double sigma2, double t2 = kInfiniteT2);

/// Controller-chosen measurement time, or nullopt when the k mapping is
/// unusable (mu <= 0 or k < 1) and the caller must fall back to the grid.
std::optional<double> controller_time(const GaussianBelief& b, double t2 = kInfiniteT2);

/// Appendix-style analytic update at the controller time for the noiseless
/// model. Throws std::domain_error when mu <= 0 (grid fallback applies).
GaussianBelief gauss_update(const GaussianBelief& b, const Measurement& m);

/// Analytic update for the finite-T2 model (eta = 1).
GaussianBelief gauss_update_t2(const GaussianBelief& b, const Measurement& m, double t2);

/// Gauss-Hermite moment-matched update against the full likelihood_t2;
/// the only update path for eta < 1.
GaussianBelief gauss_moment_match(const GaussianBelief& b, const Measurement& m,
                                  double eta, double t2);

/// Exact posterior moments over a full record under a uniform prior,
/// computed coarse-to-fine: measurements enter in order of increasing time,
/// each zoom stage admitting only times the current grid resolves, then
/// shrinking the window to the posterior mass region. Serves as the
/// grid-backed consistency authority for Gaussian tracking.
struct ZoomedPosterior {
    double mean;
    double var;
    double lo, hi;   // final window
    int stages;
};
ZoomedPosterior zoomed_posterior_moments(const Record& record, double eta, double t2,
                                         int nodes = 1024);

} // namespace qfe
