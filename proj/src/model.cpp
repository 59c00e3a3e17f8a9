#include "qfe/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qfe {

namespace {

void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("measurement time must be finite and nonnegative");
}

void check_noise(double eta, double t2) {
    if (!(eta > 0.0) || !(eta <= 1.0))
        throw std::domain_error("visibility eta must lie in (0, 1]");
    if (!(t2 > 0.0))  // +inf passes
        throw std::domain_error("t2 must be positive or infinite");
}

} // namespace

TrueModel::TrueModel(double omega_, double eta_, double t2_)
    : omega(omega_), eta(eta_), t2(t2_) {
    if (!(omega > 0.0) || !(omega < 1.0))
        throw std::domain_error("omega must lie in the open interval (0, 1)");
    check_noise(eta, t2);
}

Measurement::Measurement(int d_, double t_) : d(d_), t(t_) {
    if (d != 0 && d != 1) throw std::domain_error("outcome bit must be 0 or 1");
    check_time(t);
}

Eigen::ArrayXd Record::times() const {
    Eigen::ArrayXd out(measurements.size());
    for (std::size_t i = 0; i < measurements.size(); ++i) out[i] = measurements[i].t;
    return out;
}

double visibility(double t, double eta, double t2) {
    return eta * std::exp(-t / t2);
}

double likelihood(int d, double omega, double t) {
    check_time(t);
    const double p0 = 0.5 * (1.0 + std::cos(omega * t));
    return d == 0 ? p0 : 1.0 - p0;
}

double likelihood_t2(int d, double omega, double t, double eta, double t2) {
    check_time(t);
    check_noise(eta, t2);
    const double p0 = 0.5 * (1.0 + visibility(t, eta, t2) * std::cos(omega * t));
    return d == 0 ? p0 : 1.0 - p0;
}

Eigen::ArrayXd likelihood_t2_over(const Eigen::ArrayXd& omegas, int d, double t,
                                  double eta, double t2) {
    check_time(t);
    check_noise(eta, t2);
    const double lam = visibility(t, eta, t2);
    const double sign = d == 0 ? 1.0 : -1.0;
    return 0.5 + (0.5 * sign * lam) * (omegas * t).cos();
}

int sample_outcome(const TrueModel& model, double t, RngStream& rng) {
    const double p1 = likelihood_t2(1, model.omega, t, model.eta, model.t2);
    return rng.uniform01() < p1 ? 1 : 0;
}

double fisher_information(const Eigen::ArrayXd& times) {
    for (Eigen::Index i = 0; i < times.size(); ++i) check_time(times[i]);
    return times.square().sum();
}

double fisher_information_t2(const Eigen::ArrayXd& times, double omega,
                             double eta, double t2) {
    check_noise(eta, t2);
    if (eta == 1.0 && std::isinf(t2)) return fisher_information(times);
    double info = 0.0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const double t = times[i];
        check_time(t);
        if (t == 0.0) continue;
        const double s = std::sin(omega * t);
        const double c = std::cos(omega * t);
        const double num = eta * eta * t * t * s * s;
        const double expo = 2.0 * t / t2;
        if (expo > 700.0) {
            // exp(2t/T2) would overflow; the term is num * exp(-2t/T2) to
            // machine precision and contributes essentially nothing.
            info += num * std::exp(-expo);
        } else {
            info += num / (std::exp(expo) - eta * eta * c * c);
        }
    }
    return info;
}

namespace {
double reciprocal_bound(double information) {
    if (information <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / information;
}
} // namespace

double crb(const Eigen::ArrayXd& times) {
    if (times.size() == 0) throw std::domain_error("crb requires a nonempty schedule");
    return reciprocal_bound(fisher_information(times));
}

double crb_t2(const Eigen::ArrayXd& times, double omega, double eta, double t2) {
    if (times.size() == 0) throw std::domain_error("crb_t2 requires a nonempty schedule");
    return reciprocal_bound(fisher_information_t2(times, omega, eta, t2));
}

double crb_t2_sharp(const Eigen::ArrayXd& times, double eta, double t2) {
    if (times.size() == 0) throw std::domain_error("crb_t2_sharp requires a nonempty schedule");
    check_noise(eta, t2);
    double denom = 0.0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const double t = times[i];
        check_time(t);
        denom += t * t * std::exp(-2.0 * t / t2);
    }
    return reciprocal_bound(eta * eta * denom);
}

double crb_ultimate(int n, double eta, double t2) {
    if (n < 1) throw std::domain_error("crb_ultimate requires n >= 1");
    check_noise(eta, t2);
    if (std::isinf(t2)) throw std::domain_error("crb_ultimate requires finite t2");
    const double e2 = std::exp(2.0);
    return e2 / (static_cast<double>(n) * eta * eta * t2 * t2);
}

double info_theoretic_floor(int n) {
    if (n < 0) throw std::domain_error("info_theoretic_floor requires n >= 0");
    return std::exp2(-2.0 * (n + 1));
}

} // namespace qfe
