#include "qfe/belief.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qfe/quadrature.hpp"

namespace qfe {

namespace {

constexpr double kMinNodes = 1000;

GaussianBelief make_belief(double mu, double sigma2) {
    GaussianBelief b{mu, sigma2, false};
    if (!(b.sigma2 > GaussianBelief::kSigma2Floor)) {
        b.sigma2 = GaussianBelief::kSigma2Floor;
        b.clamped = true;
    }
    return b;
}

} // namespace

GridPosterior::GridPosterior(Eigen::ArrayXd nodes, Eigen::ArrayXd weights,
                             double lo, double hi)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), lo_(lo), hi_(hi) {
    if (nodes_.size() < kMinNodes)
        throw std::domain_error("grid posterior needs at least 1000 nodes");
    if (nodes_.size() != weights_.size())
        throw std::domain_error("node/weight size mismatch");
    if (!(lo_ >= 0.0) || !(hi_ <= 1.0) || !(lo_ < hi_))
        throw std::domain_error("grid support must satisfy 0 <= lo < hi <= 1");
    if (!(nodes_[0] > lo_) || !(nodes_[nodes_.size() - 1] < hi_))
        throw std::domain_error("grid nodes must lie strictly inside the support");
}

GridPosterior GridPosterior::uniform(int n) {
    return uniform_window(0.0, 1.0, n);
}

GridPosterior GridPosterior::uniform_window(double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    Eigen::ArrayXd nodes = lo + h * (Eigen::ArrayXd::LinSpaced(n, 0, n - 1) + 0.5);
    Eigen::ArrayXd w = Eigen::ArrayXd::Constant(n, 1.0 / (hi - lo));
    return GridPosterior(std::move(nodes), std::move(w), lo, hi);
}

double GridPosterior::integrate(const Eigen::ArrayXd& f_at_nodes) const {
    const Eigen::Index n = nodes_.size();
    const Eigen::ArrayXd fw = f_at_nodes * weights_;
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        acc += 0.5 * (fw[i] + fw[i + 1]) * (nodes_[i + 1] - nodes_[i]);
    // end slivers: extend boundary density to the support edges
    acc += fw[0] * (nodes_[0] - lo_);
    acc += fw[n - 1] * (hi_ - nodes_[n - 1]);
    return acc;
}

double GridPosterior::total_mass() const {
    return integrate(Eigen::ArrayXd::Ones(nodes_.size()));
}

void GridPosterior::normalize() {
    const double z = total_mass();
    if (!(z > 0.0) || !std::isfinite(z))
        throw DegeneratePosteriorError("grid posterior mass vanished");
    weights_ /= z;
}

double GridPosterior::mass_outside(double a, double b) const {
    Eigen::ArrayXd indicator =
        ((nodes_ < a) || (nodes_ > b)).cast<double>();
    return integrate(indicator);
}

void GridPosterior::apply_likelihood(const Eigen::ArrayXd& lik_at_nodes) {
    weights_ *= lik_at_nodes;
    normalize();
}

std::pair<double, double> GridPosterior::moments() const {
    const double mean = integrate(nodes_);
    const double var = integrate((nodes_ - mean).square());
    return {mean, var < 0.0 ? 0.0 : var};
}

GridPosterior grid_update(const GridPosterior& post, const Measurement& m,
                          double eta, double t2) {
    GridPosterior next = post;
    next.apply_likelihood(likelihood_t2_over(post.nodes(), m.d, m.t, eta, t2));
    return next;
}

std::pair<double, double> grid_moments(const GridPosterior& post) {
    return post.moments();
}

double marginal_outcome_prob(const GaussianBelief& b, int d, double t) {
    const double x = b.sigma2 * t * t;
    const double damp = x > 1400.0 ? 0.0 : std::exp(-0.5 * x);
    const double p0 = 0.5 + 0.5 * std::cos(b.mu * t) * damp;
    return d == 0 ? p0 : 1.0 - p0;
}

OutcomeMoments posterior_moments(const GaussianBelief& b, int d, double t, double t2) {
    const double mu = b.mu, s2 = b.sigma2;
    const double c = 2.0 * d - 1.0;
    const double cosmt = std::cos(mu * t);
    const double sinmt = std::sin(mu * t);
    const double expo = 0.5 * s2 * t * t + t / t2;
    const double damp = expo > 1400.0 ? 0.0 : std::exp(-expo);
    // B = E[cos(w t)], A and Q from E[w cos(w t)], E[w^2 cos(w t)]
    const double B = damp * cosmt;
    const double A = damp * (s2 * t * sinmt - mu * cosmt);
    const double Q = damp * ((mu * mu - s2 * s2 * t * t + s2) * cosmt -
                             2.0 * mu * s2 * t * sinmt);
    const double two_p = 1.0 - c * B;
    if (!(two_p > 0.0))
        throw DegeneratePosteriorError("outcome has zero marginal probability");
    const double mean = (mu + c * A) / two_p;
    const double ex2 = (mu * mu + s2 - c * Q) / two_p;
    double var = ex2 - mean * mean;
    if (var < 0.0) var = 0.0;
    return {0.5 * two_p, mean, var};
}

double risk_envelope(double t, double sigma2) {
    const double x = sigma2 * t * t;
    if (x > 700.0) return sigma2;
    return sigma2 * (1.0 - x * std::exp(-x));
}

ExpectedRisk expected_posterior_variance(const GaussianBelief& b, double t) {
    if (!(t >= 0.0)) throw std::domain_error("candidate time must be nonnegative");
    const double s2 = b.sigma2;
    const double x = s2 * t * t;
    double risk;
    if (t == 0.0 || x > 700.0) {
        risk = s2;
    } else {
        const double sinmt = std::sin(b.mu * t);
        const double cosmt = std::cos(b.mu * t);
        risk = s2 * (1.0 + x * sinmt * sinmt / (cosmt * cosmt - std::exp(x)));
    }
    return {t, risk, risk_envelope(t, s2)};
}

double envelope_minimizer_time(double sigma2, double t2) {
    if (!(sigma2 > 0.0)) throw std::domain_error("sigma2 must be positive");
    if (std::isinf(t2)) return 1.0 / std::sqrt(sigma2);
    return 2.0 * t2 / (1.0 + std::sqrt(1.0 + 4.0 * sigma2 * t2 * t2));
}

int controller_k(double mu, double sigma2, double t2) {
    const double t_hat = envelope_minimizer_time(sigma2, t2);
    const double raw = mu * t_hat / kPi + 0.5;
    return static_cast<int>(std::llround(raw));
}

std::optional<double> controller_time(const GaussianBelief& b, double t2) {
    if (!(b.mu > 0.0)) return std::nullopt;
    const int k = controller_k(b.mu, b.sigma2, t2);
    if (k < 1) return std::nullopt;
    const double t = (2.0 * k - 1.0) * kPi / (2.0 * b.mu);
    if (!(t > 0.0) || !std::isfinite(t)) return std::nullopt;
    return t;
}

namespace {

// Shared Appendix-C update at the k-th achievable minimum. sin(mu t) at the
// controller time is exactly (-1)^(k+1), so no large-argument trig is needed.
GaussianBelief analytic_update(const GaussianBelief& b, int d, double t2) {
    if (!(b.mu > 0.0))
        throw std::domain_error("analytic update requires mu > 0; use the grid fallback");
    const int k = controller_k(b.mu, b.sigma2, t2);
    if (k < 1)
        throw std::domain_error("controller k < 1; use the grid fallback");
    const double t = (2.0 * k - 1.0) * kPi / (2.0 * b.mu);
    const double expo = 0.5 * b.sigma2 * t * t + t / t2;
    const double damp = expo > 1400.0 ? 0.0 : std::exp(-expo);
    const double sgn = k % 2 == 1 ? 1.0 : -1.0;  // sin(mu t) = (-1)^(k+1)
    const double c = 2.0 * d - 1.0;
    const double mean = b.mu + c * sgn * b.sigma2 * t * damp;
    const double var = b.sigma2 - b.sigma2 * b.sigma2 * t * t * damp * damp;
    return make_belief(mean, var);
}

} // namespace

GaussianBelief gauss_update(const GaussianBelief& b, const Measurement& m) {
    return analytic_update(b, m.d, kInfiniteT2);
}

GaussianBelief gauss_update_t2(const GaussianBelief& b, const Measurement& m, double t2) {
    return analytic_update(b, m.d, t2);
}

ZoomedPosterior zoomed_posterior_moments(const Record& record, double eta, double t2,
                                         int nodes) {
    if (record.empty()) return {0.5, 1.0 / 12.0, 0.0, 1.0, 0};
    std::vector<const Measurement*> by_time;
    by_time.reserve(record.measurements.size());
    for (const Measurement& m : record.measurements) by_time.push_back(&m);
    std::stable_sort(by_time.begin(), by_time.end(),
                     [](const Measurement* a, const Measurement* b) { return a->t < b->t; });

    double lo = 0.0, hi = 1.0;
    int n = nodes;
    double mean = 0.5, var = 1.0 / 12.0;
    int stage = 0;
    for (; stage < 64; ++stage) {
        const double h = (hi - lo) / n;
        const double t_cap = 0.5 / h;  // phase step per node stays below 1/2 rad
        std::size_t m_count = 0;
        while (m_count < by_time.size() && by_time[m_count]->t <= t_cap) ++m_count;
        const bool all_in = m_count == by_time.size();

        Eigen::ArrayXd grid = lo + h * (Eigen::ArrayXd::LinSpaced(n, 0, n - 1) + 0.5);
        Eigen::ArrayXd w = Eigen::ArrayXd::Ones(n);
        for (std::size_t j = 0; j < m_count; ++j) {
            const Measurement& m = *by_time[j];
            w *= likelihood_t2_over(grid, m.d, m.t, eta, t2);
            if ((j & 15u) == 15u) {
                const double peak = w.maxCoeff();
                if (!(peak > 0.0))
                    throw DegeneratePosteriorError("zoomed posterior mass vanished");
                w /= peak;
            }
        }
        const double z = w.sum();
        if (!(z > 0.0) || !std::isfinite(z))
            throw DegeneratePosteriorError("zoomed posterior mass vanished");
        w /= z;
        mean = (w * grid).sum();
        var = (w * (grid - mean).square()).sum();
        if (var < 0.0) var = 0.0;

        const double sig = std::sqrt(var);
        double nlo = std::max(mean - 8.0 * sig, 0.0);
        double nhi = std::min(mean + 8.0 * sig, 1.0);
        const double min_width = 1024.0 * std::abs(mean) *
                                 std::numeric_limits<double>::epsilon();
        if (nhi - nlo < min_width) break;
        const bool stalled = (nhi - nlo) > 0.7 * (hi - lo);
        if (all_in) {
            if (stalled) break;
            lo = nlo; hi = nhi;
        } else if (stalled) {
            if (n >= 16 * nodes) break;  // honest wide posterior, resolution capped
            n *= 2;
        } else {
            lo = nlo; hi = nhi;
        }
    }
    return {mean, var, lo, hi, stage};
}

GaussianBelief gauss_moment_match(const GaussianBelief& b, const Measurement& m,
                                  double eta, double t2) {
    static thread_local QuadratureRule rule = gauss_hermite(96);
    const double t = m.t;
    auto lik = [&](double w) { return likelihood_t2(m.d, w, t, eta, t2); };
    const double z = gauss_expect(rule, b.mu, b.sigma2, lik);
    // convergence check against the closed-form marginal
    const double lam = visibility(t, eta, t2);
    const double x = b.sigma2 * t * t;
    const double damp = x > 1400.0 ? 0.0 : std::exp(-0.5 * x);
    const double z_closed =
        0.5 + 0.5 * (1.0 - 2.0 * m.d) * lam * std::cos(b.mu * t) * damp;
    if (!(z > 0.0) || std::abs(z - z_closed) > 1e-8)
        throw DegeneratePosteriorError("moment-match quadrature did not converge");
    const double m1 =
        gauss_expect(rule, b.mu, b.sigma2, [&](double w) { return w * lik(w); }) / z;
    const double m2 =
        gauss_expect(rule, b.mu, b.sigma2, [&](double w) { return w * w * lik(w); }) / z;
    double var = m2 - m1 * m1;
    return make_belief(m1, var);
}

} // namespace qfe
