#include "qfe/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace qfe {

namespace {

constexpr double kDegenerateMuSigmas = 5.0;  // mu < 5 sigma -> ladder stepping

bool tracking_usable(const GaussianBelief& b, double t2) {
    if (!(b.mu >= kDegenerateMuSigmas * std::sqrt(b.sigma2))) return false;
    return controller_time(b, t2).has_value();
}

} // namespace

std::string to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::Fixed: return "fixed";
        case StrategyKind::LinearGrid: return "linear";
        case StrategyKind::Exponential: return "exponential";
        case StrategyKind::AdaptiveGaussian: return "adaptive";
    }
    return "?";
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Mle: return "mle";
        case EstimatorKind::Fourier: return "fourier";
        case EstimatorKind::BayesMean: return "bayes";
        case EstimatorKind::PosteriorMean: return "posterior";
        case EstimatorKind::OracleTruth: return "oracle";
    }
    return "?";
}

StrategySpec::StrategySpec(StrategyKind kind_, int n_, double exp_base_, int warmup_len_)
    : kind(kind_), n(n_), exp_base(exp_base_), warmup_len(warmup_len_) {
    if (n < 0) throw std::domain_error("measurement count must be nonnegative");
    if (kind == StrategyKind::Exponential && !(exp_base > 1.0))
        throw std::domain_error("exponential base must exceed 1");
    if (kind == StrategyKind::AdaptiveGaussian && warmup_len < 1)
        throw std::domain_error("warm-up length must be at least 1");
}

EstimatorKind default_estimator(StrategyKind kind) {
    return kind == StrategyKind::AdaptiveGaussian ? EstimatorKind::PosteriorMean
                                                  : EstimatorKind::Mle;
}

Eigen::ArrayXd schedule(const StrategySpec& spec) {
    if (spec.kind == StrategyKind::AdaptiveGaussian)
        throw std::domain_error("adaptive strategies have no offline schedule");
    Eigen::ArrayXd t(spec.n);
    for (int k = 1; k <= spec.n; ++k) {
        switch (spec.kind) {
            case StrategyKind::Fixed: t[k - 1] = kPi; break;
            case StrategyKind::LinearGrid: t[k - 1] = k * kPi; break;
            case StrategyKind::Exponential: t[k - 1] = std::pow(spec.exp_base, k); break;
            default: break;
        }
    }
    return t;
}

AdaptiveState::AdaptiveState(int warmup_len_, int grid_nodes)
    : grid(GridPosterior::uniform(grid_nodes)), warmup_len(warmup_len_) {}

double next_time(const AdaptiveState& state, double /*eta*/, double t2) {
    if (state.phase == AdaptiveState::Phase::Tracking && tracking_usable(state.belief, t2))
        return *controller_time(state.belief, t2);
    return (state.grid_steps + 1) * kPi;  // warm-up ladder
}

namespace {

void adaptive_step_impl(AdaptiveState& state, const Measurement& m, double eta,
                        double t2, const Eigen::ArrayXd* ladder_lik) {
    state.history.measurements.push_back(m);
    if (state.phase == AdaptiveState::Phase::Warmup) {
        if (ladder_lik != nullptr)
            state.grid.apply_likelihood(*ladder_lik);
        else
            state.grid.apply_likelihood(
                likelihood_t2_over(state.grid.nodes(), m.d, m.t, eta, t2));
        ++state.grid_steps;
        if (state.history.size() >= state.warmup_len) {
            auto [mean, var] = state.grid.moments();
            GaussianBelief candidate{mean, var, false};
            if (tracking_usable(candidate, t2)) {
                state.belief = candidate;
                state.phase = AdaptiveState::Phase::Tracking;  // one-way transition
            }
        }
        return;
    }
    const auto t_ctrl = controller_time(state.belief, t2);
    const bool at_ctrl =
        t_ctrl && std::abs(m.t - *t_ctrl) <= 1e-9 * std::max(1.0, *t_ctrl);
    if (eta == 1.0 && at_ctrl && tracking_usable(state.belief, t2)) {
        state.belief = std::isinf(t2) ? gauss_update(state.belief, m)
                                      : gauss_update_t2(state.belief, m, t2);
    } else {
        // eta < 1, or a ladder step taken while the belief is degenerate
        state.belief = gauss_moment_match(state.belief, m, eta, t2);
        if (!at_ctrl) ++state.grid_steps;
    }
}

} // namespace

void adaptive_step(AdaptiveState& state, const Measurement& m, double eta, double t2) {
    adaptive_step_impl(state, m, eta, t2, nullptr);
}

TrialRunner::TrialRunner(const StrategySpec& spec, double eta, double t2,
                         std::optional<EstimatorKind> estimator)
    : spec_(spec), eta_(eta), t2_(t2),
      estimator_(estimator.value_or(default_estimator(spec.kind))) {
    if (spec_.kind == StrategyKind::AdaptiveGaussian) {
        if (estimator_ == EstimatorKind::Fourier)
            throw std::domain_error("fourier estimation requires a linear-grid schedule");
        const int nodes = GridPosterior::kDefaultNodes;
        const double h = 1.0 / nodes;
        warm_nodes_ = h * (Eigen::ArrayXd::LinSpaced(nodes, 0, nodes - 1) + 0.5);
        warm_lik0_.reserve(spec_.n);
        warm_lik1_.reserve(spec_.n);
        for (int k = 1; k <= spec_.n; ++k) {
            const double t = k * kPi;
            warm_lik0_.push_back(likelihood_t2_over(warm_nodes_, 0, t, eta_, t2_));
            warm_lik1_.push_back(likelihood_t2_over(warm_nodes_, 1, t, eta_, t2_));
        }
    } else {
        if (estimator_ == EstimatorKind::Fourier && spec_.kind != StrategyKind::LinearGrid)
            throw std::domain_error("fourier estimation requires a linear-grid schedule");
        offline_times_ = schedule(spec_);
        const bool scanning = estimator_ == EstimatorKind::Mle ||
                              estimator_ == EstimatorKind::BayesMean ||
                              estimator_ == EstimatorKind::PosteriorMean;
        if (scanning && spec_.n > 0)
            scanner_ = std::make_unique<MleScanner>(offline_times_, eta_, t2_);
    }
}

TrialRunner::~TrialRunner() = default;

TrialResult TrialRunner::run(const TrueModel& model, RngStream& rng) const {
    if (model.eta != eta_ || model.t2 != t2_)
        throw std::domain_error("model noise parameters do not match the runner");
    return spec_.kind == StrategyKind::AdaptiveGaussian ? run_adaptive(model, rng)
                                                        : run_offline(model, rng);
}

TrialResult TrialRunner::run_offline(const TrueModel& model, RngStream& rng) const {
    TrialResult out;
    out.record.measurements.reserve(spec_.n);
    std::vector<int> outcomes(spec_.n);
    for (int k = 0; k < spec_.n; ++k) {
        const double t = offline_times_[k];
        outcomes[k] = sample_outcome(model, t, rng);
        out.record.measurements.emplace_back(outcomes[k], t);
    }
    if (spec_.n == 0) {
        out.estimate = 0.5;  // prior mean
        return out;
    }
    switch (estimator_) {
        case EstimatorKind::Mle:
            out.estimate = scanner_->solve(outcomes).omega_hat;
            break;
        case EstimatorKind::BayesMean:
        case EstimatorKind::PosteriorMean:
            out.estimate = scanner_->solve_bayes(outcomes).omega_hat;
            break;
        case EstimatorKind::Fourier:
            out.estimate = fourier_estimate(out.record).omega_hat;
            break;
        case EstimatorKind::OracleTruth:
            out.estimate = model.omega;
            break;
    }
    return out;
}

TrialResult TrialRunner::run_adaptive(const TrueModel& model, RngStream& rng) const {
    AdaptiveState state(spec_.warmup_len);
    for (int i = 0; i < spec_.n; ++i) {
        const double t = next_time(state, eta_, t2_);
        const Measurement m(sample_outcome(model, t, rng), t);
        const Eigen::ArrayXd* row = nullptr;
        if (state.phase == AdaptiveState::Phase::Warmup) {
            const int k = state.grid_steps;  // measurement at (k+1) pi
            row = m.d == 0 ? &warm_lik0_[k] : &warm_lik1_[k];
        }
        adaptive_step_impl(state, m, eta_, t2_, row);
    }
    TrialResult out;
    out.record = state.history;
    if (estimator_ == EstimatorKind::OracleTruth) {
        out.estimate = model.omega;
        return out;
    }
    if (state.phase == AdaptiveState::Phase::Warmup) {
        out.estimate = std::clamp(state.grid.moments().first, 0.0, 1.0);
        return out;
    }
    // Grid-backed consistency pass over the full record: Gaussian tracking can
    // follow a wrong likelihood lobe through a stretch of outcomes, which the
    // exact posterior over the record detects and repairs.
    const ZoomedPosterior zp = zoomed_posterior_moments(state.history, eta_, t2_);
    const double sig_r = std::sqrt(std::max(zp.var, 1e-60));
    double est = state.belief.mu;
    const double ratio = state.belief.sigma2 / std::max(zp.var, 1e-60);
    if (std::abs(est - zp.mean) > 3.0 * sig_r || ratio < 0.25 || ratio > 4.0)
        est = zp.mean;
    out.estimate = std::clamp(est, 0.0, 1.0);
    return out;
}

TrialResult run_trial(const StrategySpec& spec, const TrueModel& model,
                      std::uint64_t seed) {
    TrialRunner runner(spec, model.eta, model.t2);
    RngStream rng(seed);
    return runner.run(model, rng);
}

BaseOptimization optimize_exponential_base(int n, double eta, double t2,
                                           const std::vector<double>& base_grid,
                                           int trials, std::uint64_t seed, int threads) {
    if (base_grid.empty()) throw std::domain_error("base grid must be nonempty");
    if (trials < 1000) throw std::domain_error("base optimization needs at least 1000 trials");
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    BaseOptimization out;
    out.bases = base_grid;
    out.risks.resize(base_grid.size());
    out.stderrs.resize(base_grid.size());
    for (std::size_t bi = 0; bi < base_grid.size(); ++bi) {
        const StrategySpec spec(StrategyKind::Exponential, n, base_grid[bi]);
        const TrialRunner runner(spec, eta, t2);
        std::vector<double> sq(trials);
        const auto worker = [&](int lo, int hi) {
            for (int tr = lo; tr < hi; ++tr) {
                // common random numbers across bases: stream keyed by trial only
                RngStream rng(seed, static_cast<std::uint64_t>(tr));
                const double omega_star = rng.uniform_open01();
                const TrueModel model(omega_star, eta, t2);
                const double e = runner.run(model, rng).estimate - omega_star;
                sq[tr] = e * e;
            }
        };
        std::vector<std::future<void>> futs;
        const int chunk = (trials + threads - 1) / threads;
        for (int th = 0; th < threads; ++th) {
            const int lo = th * chunk, hi = std::min(trials, lo + chunk);
            if (lo >= hi) break;
            futs.push_back(std::async(std::launch::async, worker, lo, hi));
        }
        for (auto& f : futs) f.get();
        double mean = 0.0;
        for (double v : sq) mean += v;
        mean /= trials;
        double ss = 0.0;
        for (double v : sq) ss += (v - mean) * (v - mean);
        out.risks[bi] = mean;
        out.stderrs[bi] =
            std::sqrt(ss / (trials - 1.0)) / std::sqrt(static_cast<double>(trials));
    }
    std::size_t best = 0;
    for (std::size_t bi = 1; bi < base_grid.size(); ++bi)
        if (out.risks[bi] < out.risks[best]) best = bi;  // ties keep the smaller base
    out.best_base = out.bases[best];
    return out;
}

} // namespace qfe
