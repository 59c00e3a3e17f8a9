#include "qfe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace qfe {

namespace {

constexpr double kLogFloor = -745.0;  // log of the smallest normal double

Eigen::ArrayXd log_lik_over(const Eigen::ArrayXd& grid, int d, double t,
                            double eta, double t2) {
    return likelihood_t2_over(grid, d, t, eta, t2).max(1e-300).log();
}

// Golden-section maximisation of f on [a, b]; returns the best point seen,
// including the bracket ends. Ties resolve toward smaller omega.
template <typename F>
std::pair<double, double> golden_max(F&& f, double a, double b) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
        if (f1 >= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    double best_x = x1, best_f = f1;
    if (f2 > best_f || (f2 == best_f && x2 < best_x)) { best_x = x2; best_f = f2; }
    return {best_x, best_f};
}

struct ScanResult {
    double omega;
    double loglik;
};

// One coarse-to-fine scan of the record's log-likelihood.
ScanResult staged_scan(const Record& record, double eta, double t2,
                       const Eigen::MatrixXd* table0, const Eigen::MatrixXd* table1,
                       const std::vector<int>* outcomes, const Eigen::ArrayXd* base_grid) {
    const int n_points = MleScanner::kScanPoints;
    // measurements sorted by time; stages admit them in aliasing-safe order
    std::vector<int> order(record.measurements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return record.measurements[a].t < record.measurements[b].t;
    });

    double lo = 0.0, hi = 1.0;
    ScanResult best{0.0, -std::numeric_limits<double>::infinity()};
    for (int stage = 0; stage < 8; ++stage) {
        const double h = (hi - lo) / n_points;
        const double t_cap = 0.5 / h;
        const bool final_stage =
            record.measurements[order.back()].t <= t_cap;
        Eigen::ArrayXd grid;
        Eigen::ArrayXd loglik;
        if (stage == 0 && table0 != nullptr) {
            grid = *base_grid;
            loglik = Eigen::ArrayXd::Zero(n_points);
            for (std::size_t k = 0; k < outcomes->size(); ++k) {
                if (record.measurements[k].t > t_cap) continue;
                loglik += ((*outcomes)[k] == 0 ? table0->row(k) : table1->row(k))
                              .array().transpose();
            }
        } else {
            grid = lo + h * (Eigen::ArrayXd::LinSpaced(n_points, 0, n_points - 1) + 0.5);
            loglik = Eigen::ArrayXd::Zero(n_points);
            for (int idx : order) {
                const Measurement& m = record.measurements[idx];
                if (m.t > t_cap) break;
                loglik += log_lik_over(grid, m.d, m.t, eta, t2);
            }
        }
        Eigen::Index i_best = 0;
        double v_best = loglik[0];
        for (Eigen::Index i = 1; i < loglik.size(); ++i)
            if (loglik[i] > v_best) { v_best = loglik[i]; i_best = i; }  // ties -> smaller omega
        if (!std::isfinite(v_best))
            throw EstimationFailureError("log-likelihood is degenerate everywhere");
        const Eigen::Index i_lo = std::max<Eigen::Index>(0, i_best - 2);
        const Eigen::Index i_hi = std::min<Eigen::Index>(n_points - 1, i_best + 2);
        if (final_stage) {
            auto f = [&](double w) { return record_log_likelihood(record, w, eta, t2); };
            auto [w_ref, f_ref] = golden_max(f, grid[i_lo], grid[i_hi]);
            best = {grid[i_best], f(grid[i_best])};
            if (f_ref > best.loglik || (f_ref == best.loglik && w_ref < best.omega))
                best = {w_ref, f_ref};
            return best;
        }
        lo = grid[i_lo];
        hi = grid[i_hi];
    }
    throw EstimationFailureError("mle zoom failed to admit all measurement times");
}

} // namespace

double record_log_likelihood(const Record& record, double omega, double eta, double t2) {
    double acc = 0.0;
    for (const Measurement& m : record.measurements) {
        const double p = likelihood_t2(m.d, omega, m.t, eta, t2);
        acc += p > 0.0 ? std::log(p) : kLogFloor;
    }
    return acc;
}

Estimate mle(const Record& record, double eta, double t2) {
    if (record.empty()) throw EstimationFailureError("mle requires a nonempty record");
    ScanResult r = staged_scan(record, eta, t2, nullptr, nullptr, nullptr, nullptr);
    return {std::clamp(r.omega, 0.0, 1.0), "mle", r.loglik, std::nullopt};
}

Estimate fourier_estimate(const Record& record) {
    const int n = record.size();
    if (n < 2) throw EstimationFailureError("fourier estimate requires at least 2 samples");
    const double dt = record.measurements[0].t;
    if (!(dt > 0.0))
        throw std::domain_error("fourier estimate requires a positive uniform grid step");
    for (int k = 0; k < n; ++k) {
        if (std::abs(record.measurements[k].t - (k + 1) * dt) > 1e-12 * std::max(1.0, (k + 1) * dt))
            throw std::domain_error("fourier estimate requires uniform times t_k = k dt");
    }
    Eigen::ArrayXd x(n);
    for (int k = 0; k < n; ++k) x[k] = record.measurements[k].d;
    x -= x.mean();

    const int n_pos = n / 2;
    if (n_pos < 1) throw EstimationFailureError("record too short for a spectrum");
    Eigen::ArrayXd power(n_pos + 1);
    power[0] = 0.0;
    for (int f = 1; f <= n_pos; ++f) {
        std::complex<double> acc(0.0, 0.0);
        const double w = -2.0 * kPi * f / n;
        for (int k = 0; k < n; ++k)
            acc += x[k] * std::polar(1.0, w * k);
        power[f] = std::norm(acc);
    }
    int peak = 1;
    for (int f = 2; f <= n_pos; ++f)
        if (power[f] > power[peak]) peak = f;
    if (!(power[peak] > 0.0))
        throw EstimationFailureError("no spectral peak above DC");

    double delta = 0.0;
    if (peak > 1 && peak < n_pos && power[peak - 1] > 0.0 && power[peak + 1] > 0.0) {
        const double la = std::log(power[peak - 1]);
        const double lb = std::log(power[peak]);
        const double lc = std::log(power[peak + 1]);
        const double den = la - 2.0 * lb + lc;
        if (den != 0.0) delta = std::clamp(0.5 * (la - lc) / den, -0.5, 0.5);
    }
    const double f_peak = (peak + delta) / (n * dt);  // cycles per unit time
    const double omega_hat = std::clamp(2.0 * kPi * f_peak, 0.0, 1.0);
    return {omega_hat, "fourier", std::nullopt, peak};
}

Estimate bayes_mean(const Record& record, double eta, double t2) {
    if (record.empty()) return {0.5, "bayes", std::nullopt, std::nullopt};
    // log-space accumulation on the default grid, then normalised moments
    const int n = 10000;
    const double h = 1.0 / n;
    Eigen::ArrayXd grid = h * (Eigen::ArrayXd::LinSpaced(n, 0, n - 1) + 0.5);
    Eigen::ArrayXd logw = Eigen::ArrayXd::Zero(n);
    for (const Measurement& m : record.measurements)
        logw += log_lik_over(grid, m.d, m.t, eta, t2);
    const double peak = logw.maxCoeff();
    if (!std::isfinite(peak))
        throw EstimationFailureError("posterior vanished everywhere on the grid");
    Eigen::ArrayXd w = (logw - peak).exp();
    const double z = w.sum();
    if (!(z > 0.0)) throw EstimationFailureError("posterior mass underflow");
    const double mean = (w * grid).sum() / z;
    return {std::clamp(mean, 0.0, 1.0), "bayes", std::nullopt, std::nullopt};
}

MleScanner::MleScanner(const Eigen::ArrayXd& times, double eta, double t2)
    : times_(times), eta_(eta), t2_(t2) {
    const int n = kScanPoints;
    const double h = 1.0 / n;
    grid_ = h * (Eigen::ArrayXd::LinSpaced(n, 0, n - 1) + 0.5);
    log_lik0_.resize(times.size(), n);
    log_lik1_.resize(times.size(), n);
    needs_zoom_ = false;
    for (Eigen::Index k = 0; k < times.size(); ++k) {
        log_lik0_.row(k) = log_lik_over(grid_, 0, times[k], eta, t2).matrix().transpose();
        log_lik1_.row(k) = log_lik_over(grid_, 1, times[k], eta, t2).matrix().transpose();
        if (times[k] > 0.5 * n) needs_zoom_ = true;
    }
}

Estimate MleScanner::solve(const std::vector<int>& outcomes) const {
    if (static_cast<Eigen::Index>(outcomes.size()) != times_.size())
        throw std::domain_error("outcome count does not match the schedule");
    Record record;
    record.measurements.reserve(outcomes.size());
    for (std::size_t k = 0; k < outcomes.size(); ++k)
        record.measurements.emplace_back(outcomes[k], times_[k]);
    ScanResult r = staged_scan(record, eta_, t2_, &log_lik0_, &log_lik1_, &outcomes, &grid_);
    return {std::clamp(r.omega, 0.0, 1.0), "mle", r.loglik, std::nullopt};
}

Estimate MleScanner::solve_bayes(const std::vector<int>& outcomes) const {
    if (static_cast<Eigen::Index>(outcomes.size()) != times_.size())
        throw std::domain_error("outcome count does not match the schedule");
    Eigen::ArrayXd logw = Eigen::ArrayXd::Zero(grid_.size());
    for (std::size_t k = 0; k < outcomes.size(); ++k)
        logw += (outcomes[k] == 0 ? log_lik0_.row(k) : log_lik1_.row(k))
                    .array().transpose();
    const double peak = logw.maxCoeff();
    if (!std::isfinite(peak))
        throw EstimationFailureError("posterior vanished everywhere on the grid");
    Eigen::ArrayXd w = (logw - peak).exp();
    const double z = w.sum();
    if (!(z > 0.0)) throw EstimationFailureError("posterior mass underflow");
    const double mean = (w * grid_).sum() / z;
    return {std::clamp(mean, 0.0, 1.0), "bayes", std::nullopt, std::nullopt};
}

} // namespace qfe
