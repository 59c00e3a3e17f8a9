#pragma once

#include <Eigen/Dense>
#include <limits>
#include <numbers>
#include <vector>

#include "qfe/rng.hpp"

namespace qfe {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInfiniteT2 = std::numeric_limits<double>::infinity();

/// Ground-truth parameters that generate simulated data.
/// omega is dimensionless in (0,1); eta is the readout visibility in (0,1];
/// t2 is the dephasing time (kInfiniteT2 selects the noiseless model exactly,
/// since exp(-t/inf) == 1 for every finite t).
struct TrueModel {
    double omega;
    double eta = 1.0;
    double t2 = kInfiniteT2;

    TrueModel(double omega_, double eta_ = 1.0, double t2_ = kInfiniteT2);
};

struct Measurement {
    int d;      // outcome bit, 0 = |+>, 1 = |->
    double t;   // evolution time, >= 0 and finite

    Measurement(int d_, double t_);
};

/// Ordered list of measurements; order is the order they were taken in.
struct Record {
    std::vector<Measurement> measurements;

    int size() const { return static_cast<int>(measurements.size()); }
    bool empty() const { return measurements.empty(); }
    Eigen::ArrayXd times() const;
};

// Combined visibility envelope eta * exp(-t / T2) applied to the coherent term.
double visibility(double t, double eta, double t2);

/// Pr(d | omega, t) for the noiseless model: sin^2(w t / 2) for d = 1,
/// cos^2(w t / 2) for d = 0. Pr(0) + Pr(1) == 1 exactly.
double likelihood(int d, double omega, double t);

/// Pr(d | omega, t, eta, T2) for the finite-T2 limited-visibility model.
double likelihood_t2(int d, double omega, double t, double eta, double t2);

/// Vectorised Pr(d | ., t, eta, t2) over an array of frequencies.
Eigen::ArrayXd likelihood_t2_over(const Eigen::ArrayXd& omegas, int d, double t,
                                  double eta, double t2);

/// Draws one outcome bit from the model at evolution time t.
int sample_outcome(const TrueModel& model, double t, RngStream& rng);

/// Fisher information of a schedule under the noiseless model: sum of t_k^2.
double fisher_information(const Eigen::ArrayXd& times);

/// Fisher information under the finite-T2 model,
/// sum_k eta^2 t_k^2 sin^2(w t_k) / (exp(2 t_k / T2) - eta^2 cos^2(w t_k)).
double fisher_information_t2(const Eigen::ArrayXd& times, double omega,
                             double eta, double t2);

/// Cramer-Rao bounds on the mean squared error. A schedule with zero Fisher
/// information yields an infinite bound, not an error.
double crb(const Eigen::ArrayXd& times);
double crb_t2(const Eigen::ArrayXd& times, double omega, double eta, double t2);

/// Sharper omega-independent bound 1 / (eta^2 sum_k t_k^2 exp(-2 t_k / T2)).
double crb_t2_sharp(const Eigen::ArrayXd& times, double eta, double t2);

/// Schedule-free floor e^2 / (N eta^2 T2^2); requires finite t2.
double crb_ultimate(int n, double eta, double t2);

/// Information-theoretic floor 2^{-2(N+1)} for any two-outcome protocol.
double info_theoretic_floor(int n);

} // namespace qfe
