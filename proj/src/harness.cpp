#include "qfe/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace qfe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

RiskPoint estimate_bayes_risk(const StrategySpec& spec, EstimatorKind estimator,
                              int n, const ModelFamily& family, int trials,
                              std::uint64_t seed, int threads) {
    if (trials < 1) throw std::domain_error("trials must be at least 1");
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    StrategySpec cell_spec = spec;
    cell_spec.n = n;
    const TrialRunner runner(cell_spec, family.eta, family.t2, estimator);

    std::vector<double> sq(trials, kNaN);
    const auto worker = [&](int lo, int hi) {
        for (int tr = lo; tr < hi; ++tr) {
            RngStream rng(seed, static_cast<std::uint64_t>(tr));
            const double omega_star = rng.uniform_open01();
            const TrueModel model(omega_star, family.eta, family.t2);
            try {
                const double e = runner.run(model, rng).estimate - omega_star;
                sq[tr] = e * e;
            } catch (const EstimationFailureError&) {
            } catch (const DegeneratePosteriorError&) {
            }
        }
    };
    if (threads == 1) {
        worker(0, trials);
    } else {
        std::vector<std::future<void>> futs;
        const int chunk = (trials + threads - 1) / threads;
        for (int th = 0; th < threads; ++th) {
            const int lo = th * chunk, hi = std::min(trials, lo + chunk);
            if (lo >= hi) break;
            futs.push_back(std::async(std::launch::async, worker, lo, hi));
        }
        for (auto& f : futs) f.get();
    }

    std::vector<double> ok;
    ok.reserve(trials);
    int failures = 0;
    for (double v : sq) {
        if (std::isnan(v)) ++failures;
        else ok.push_back(v);
    }
    if (failures > kMaxFailureFraction * trials || ok.empty())
        throw CellFailureError(failures, trials);

    double mean = 0.0;
    for (double v : ok) mean += v;
    mean /= static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - mean) * (v - mean);
    const double sd = ok.size() > 1 ? std::sqrt(ss / (ok.size() - 1.0)) : 0.0;

    std::vector<double> med = ok;
    const std::size_t mid = med.size() / 2;
    std::nth_element(med.begin(), med.begin() + mid, med.end());
    double median = med[mid];
    if (med.size() % 2 == 0) {
        const double lower = *std::max_element(med.begin(), med.begin() + mid);
        median = 0.5 * (median + lower);
    }

    return {mean, sd / std::sqrt(static_cast<double>(ok.size())), median, failures, trials};
}

std::vector<int> ExperimentPlan::default_n_values() {
    std::vector<int> out;
    for (int n = 16; n <= 124; n += 4) out.push_back(n);
    return out;
}

void ExperimentPlan::validate() const {
    if (strategies.empty()) throw std::domain_error("plan needs at least one strategy");
    if (trials < 1) throw std::domain_error("trials must be at least 1");
    if (n_values.empty()) throw std::domain_error("plan needs at least one value of n");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (n_values[i] <= n_values[i - 1])
            throw std::domain_error("n_values must be strictly increasing");
    if (n_values.front() < 0) throw std::domain_error("n_values must be nonnegative");
    if (!(eta > 0.0) || !(eta <= 1.0)) throw std::domain_error("eta must lie in (0, 1]");
    if (!(t2 > 0.0)) throw std::domain_error("t2 must be positive or infinite");
}

RiskCurve run_plan(const ExperimentPlan& plan) {
    plan.validate();
    const ModelFamily family{plan.eta, plan.t2};
    RiskCurve curve;
    for (const StrategyBinding& binding : plan.strategies) {
        for (int n : plan.n_values) {
            RiskRow row;
            row.strategy = to_string(binding.spec.kind);
            if (binding.spec.kind == StrategyKind::Exponential) {
                row.strategy += "(" + std::to_string(binding.spec.exp_base) + ")";
            }
            row.estimator = to_string(binding.estimator);
            row.n = n;
            row.floor = info_theoretic_floor(n);
            row.crb_ultimate =
                std::isinf(plan.t2) ? 0.0 : (n >= 1 ? crb_ultimate(n, plan.eta, plan.t2) : kNaN);
            if (binding.spec.kind == StrategyKind::AdaptiveGaussian || n == 0) {
                row.crb = kNaN;
                row.crb_sharp = kNaN;
            } else {
                StrategySpec s = binding.spec;
                s.n = n;
                const Eigen::ArrayXd times = schedule(s);
                row.crb = crb(times);
                row.crb_sharp = crb_t2_sharp(times, plan.eta, plan.t2);
            }
            try {
                const RiskPoint pt = estimate_bayes_risk(binding.spec, binding.estimator,
                                                         n, family, plan.trials,
                                                         plan.seed, plan.threads);
                row.risk_mean = pt.mean;
                row.risk_stderr = pt.stderr_val;
                row.risk_median = pt.median;
                row.failures = pt.failures;
                row.cell_failed = false;
            } catch (const CellFailureError& e) {
                row.risk_mean = row.risk_stderr = row.risk_median = kNaN;
                row.failures = e.failures;
                row.cell_failed = true;
                ++curve.failed_cells;
            }
            curve.rows.push_back(std::move(row));
        }
    }
    return curve;
}

DecayFit fit_decay(const RiskCurve& curve, const std::string& strategy_label,
                   int n_min, int n_max) {
    const bool log_n = strategy_label.rfind("adaptive", 0) != 0;
    std::vector<double> xs, ys;
    for (const RiskRow& row : curve.rows) {
        if (row.strategy != strategy_label) continue;
        if (row.cell_failed || !(row.risk_mean > 0.0)) continue;
        if (row.n < n_min || row.n > n_max) continue;
        xs.push_back(log_n ? std::log(static_cast<double>(row.n))
                           : static_cast<double>(row.n));
        ys.push_back(std::log(row.risk_mean));
    }
    if (xs.size() < 5)
        throw std::domain_error("fit_decay needs at least 5 usable points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i];
        sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i]; syy += ys[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::domain_error("degenerate abscissae in fit_decay");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = slope * xs[i] + intercept;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return {slope, intercept, r2, static_cast<int>(xs.size())};
}

} // namespace qfe
