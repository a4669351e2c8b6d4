#include "stirsap/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stirsap/errors.hpp"

namespace stirsap {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::TARGET_REACHED: return "target_reached";
        case Termination::BUDGET_EXHAUSTED: return "budget_exhausted";
        case Termination::STAGNATION: return "stagnation";
    }
    return "budget_exhausted";
}

int CmaesConfig::resolved_population() const {
    if (population > 0) return population;
    return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

int CmaesConfig::resolved_parents() const {
    if (parents > 0) return parents;
    return resolved_population() / 2;
}

double CmaesConfig::resolved_step() const {
    if (initial_step > 0.0) return initial_step;
    return 0.3 * (upper_bounds - lower_bounds).minCoeff();
}

void CmaesConfig::validate() const {
    if (dimension < 1) throw ConfigError("cmaes: dimension must be >= 1");
    if (resolved_population() < 4) throw ConfigError("cmaes: population must be >= 4");
    if (resolved_parents() < 1 || resolved_parents() > resolved_population())
        throw ConfigError("cmaes: parents must lie in [1, population]");
    if (initial_mean.size() != dimension) throw ConfigError("cmaes: initial_mean has wrong size");
    if (lower_bounds.size() != dimension || upper_bounds.size() != dimension)
        throw ConfigError("cmaes: bounds have wrong size");
    for (int i = 0; i < dimension; ++i) {
        if (!(lower_bounds(i) < upper_bounds(i)))
            throw ConfigError("cmaes: each lower bound must be below its upper bound");
        if (initial_mean(i) < lower_bounds(i) || initial_mean(i) > upper_bounds(i))
            throw ConfigError("cmaes: initial_mean must lie inside the bounds");
    }
    if (!(resolved_step() > 0.0)) throw ConfigError("cmaes: initial step must be positive");
    if (max_evaluations < 1) throw ConfigError("cmaes: max_evaluations must be >= 1");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

constexpr double stagnation_improvement = 1e-12;
constexpr int stagnation_window = 30;

} // namespace

NormalSource::NormalSource(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t NormalSource::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double NormalSource::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double NormalSource::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

Cmaes::Cmaes(CmaesConfig config) : cfg_(std::move(config)), rng_(cfg_.seed) {
    cfg_.validate();
    n_ = cfg_.dimension;
    lambda_ = cfg_.resolved_population();
    mu_ = cfg_.resolved_parents();

    weights_ = Eigen::VectorXd(mu_);
    for (int i = 0; i < mu_; ++i)
        weights_(i) = std::log(mu_ + 0.5) - std::log(static_cast<double>(i + 1));
    weights_ /= weights_.sum();
    mu_eff_ = 1.0 / weights_.squaredNorm();

    const double n = static_cast<double>(n_);
    c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
    d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
    c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
    c_mu_ = std::min(1.0 - c1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) /
                                    ((n + 2.0) * (n + 2.0) + mu_eff_));
    chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    mean_ = cfg_.initial_mean;
    sigma_ = cfg_.resolved_step();
    cov_ = Eigen::MatrixXd::Identity(n_, n_);
    path_sigma_ = Eigen::VectorXd::Zero(n_);
    path_c_ = Eigen::VectorXd::Zero(n_);
    decompose();
}

void Cmaes::decompose() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
    bool bad = solver.info() != Eigen::Success;
    double floor_value = 1e-14 * std::max(cov_.trace(), 1e-300);
    if (!bad && solver.eigenvalues().minCoeff() > floor_value) {
        eigvec_ = solver.eigenvectors();
        eigval_sqrt_ = solver.eigenvalues().cwiseSqrt();
        return;
    }
    // Repair: clamp the spectrum at the floor and retry once.
    Eigen::VectorXd vals =
        bad ? Eigen::VectorXd::Constant(n_, floor_value) : solver.eigenvalues();
    for (int i = 0; i < n_; ++i) vals(i) = std::max(vals(i), floor_value);
    Eigen::MatrixXd basis =
        bad ? Eigen::MatrixXd::Identity(n_, n_) : solver.eigenvectors();
    cov_ = basis * vals.asDiagonal() * basis.transpose();
    cov_ = 0.5 * (cov_ + cov_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> retry(cov_);
    if (retry.info() != Eigen::Success || retry.eigenvalues().minCoeff() <= 0.0)
        throw NumericalError("cmaes: covariance repair failed");
    eigvec_ = retry.eigenvectors();
    eigval_sqrt_ = retry.eigenvalues().cwiseSqrt();
}

std::vector<Eigen::VectorXd> Cmaes::ask() {
    std::vector<Eigen::VectorXd> candidates;
    candidates.reserve(lambda_);
    last_y_.assign(lambda_, Eigen::VectorXd::Zero(n_));
    for (int i = 0; i < lambda_; ++i) {
        Eigen::VectorXd y(n_), x(n_);
        bool inside = false;
        for (int attempt = 0; attempt < 100 && !inside; ++attempt) {
            for (int d = 0; d < n_; ++d) y(d) = eigval_sqrt_(d) * rng_.normal();
            y = eigvec_ * y;
            x = mean_ + sigma_ * y;
            inside = true;
            for (int d = 0; d < n_; ++d) {
                if (x(d) < cfg_.lower_bounds(d) || x(d) > cfg_.upper_bounds(d)) {
                    inside = false;
                    break;
                }
            }
        }
        if (!inside) {
            for (int d = 0; d < n_; ++d)
                x(d) = std::clamp(x(d), cfg_.lower_bounds(d), cfg_.upper_bounds(d));
            y = (x - mean_) / sigma_;
        }
        last_y_[i] = y;
        candidates.push_back(std::move(x));
    }
    return candidates;
}

void Cmaes::tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& costs) {
    if (candidates.size() != static_cast<std::size_t>(lambda_) || costs.size() != candidates.size())
        throw NumericalError("cmaes::tell: expected one cost per candidate");

    std::vector<int> order(lambda_);
    std::iota(order.begin(), order.end(), 0);
    auto keyed = [&](int i) {
        const double c = costs[i];
        return std::isnan(c) ? std::numeric_limits<double>::infinity() : c;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return keyed(a) < keyed(b); });
    if (std::isinf(keyed(order.front())))
        throw NumericalError("cmaes::tell: every candidate cost is NaN");

    evaluations_ += lambda_;
    ++generation_;

    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < mu_; ++i) {
        const int idx = order[i];
        y_w += weights_(i) * last_y_[idx];
        new_mean += weights_(i) * candidates[idx];
    }
    mean_ = new_mean;

    // Cumulative step-size adaptation.
    Eigen::MatrixXd inv_sqrt =
        eigvec_ * eigval_sqrt_.cwiseInverse().asDiagonal() * eigvec_.transpose();
    path_sigma_ = (1.0 - c_sigma_) * path_sigma_ +
                  std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * (inv_sqrt * y_w);
    const double expected_decay =
        std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * static_cast<double>(generation_)));
    const bool h_sigma =
        path_sigma_.norm() / expected_decay < (1.4 + 2.0 / (n_ + 1.0)) * chi_n_;

    path_c_ = (1.0 - c_c_) * path_c_;
    if (h_sigma) path_c_ += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < mu_; ++i) {
        const auto& y = last_y_[order[i]];
        rank_mu += weights_(i) * (y * y.transpose());
    }
    const double h_correction = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
    cov_ = (1.0 - c1_ - c_mu_) * cov_ +
           c1_ * (path_c_ * path_c_.transpose() + h_correction * cov_) + c_mu_ * rank_mu;
    cov_ = 0.5 * (cov_ + cov_.transpose());

    sigma_ *= std::exp((c_sigma_ / d_sigma_) * (path_sigma_.norm() / chi_n_ - 1.0));
    decompose();

    // Best-so-far bookkeeping (ties keep the earlier candidate).
    const int best_idx = order.front();
    if (!has_best_ || keyed(best_idx) < best_cost_) {
        best_cost_ = keyed(best_idx);
        best_params_ = candidates[best_idx];
        has_best_ = true;
    }
    recent_best_.push_back(best_cost_);

    std::vector<double> sorted_costs(costs.size());
    for (int i = 0; i < lambda_; ++i) sorted_costs[i] = keyed(i);
    std::sort(sorted_costs.begin(), sorted_costs.end());
    const double median = lambda_ % 2 == 1
                              ? sorted_costs[lambda_ / 2]
                              : 0.5 * (sorted_costs[lambda_ / 2 - 1] + sorted_costs[lambda_ / 2]);
    history_.push_back({generation_, evaluations_, best_cost_, median, sigma_});
}

bool Cmaes::should_stop() const {
    if (cfg_.target_cost && has_best_ && best_cost_ <= *cfg_.target_cost) return true;
    if (evaluations_ + lambda_ > cfg_.max_evaluations) return true;
    if (recent_best_.size() > static_cast<std::size_t>(stagnation_window)) {
        const double past = recent_best_[recent_best_.size() - 1 - stagnation_window];
        if (past - best_cost_ <= stagnation_improvement) return true;
    }
    return false;
}

Termination Cmaes::termination_reason() const {
    if (cfg_.target_cost && has_best_ && best_cost_ <= *cfg_.target_cost)
        return Termination::TARGET_REACHED;
    if (recent_best_.size() > static_cast<std::size_t>(stagnation_window)) {
        const double past = recent_best_[recent_best_.size() - 1 - stagnation_window];
        if (past - best_cost_ <= stagnation_improvement) return Termination::STAGNATION;
    }
    return Termination::BUDGET_EXHAUSTED;
}

OptimizationResult Cmaes::result() const {
    OptimizationResult res;
    res.best_params = has_best_ ? best_params_ : mean_;
    res.best_cost = has_best_ ? best_cost_ : std::numeric_limits<double>::infinity();
    res.evaluations = evaluations_;
    res.history = history_;
    res.termination = termination_reason();
    res.seed = cfg_.seed;
    return res;
}

OptimizationResult optimize(const CostFn& cost_fn, const CmaesConfig& config) {
    BatchEvaluator evaluator = [&cost_fn](const std::vector<Eigen::VectorXd>& xs) {
        std::vector<double> costs;
        costs.reserve(xs.size());
        for (const auto& x : xs) costs.push_back(cost_fn(x));
        return costs;
    };
    return optimize(evaluator, config, nullptr);
}

OptimizationResult optimize(const BatchEvaluator& evaluator, const CmaesConfig& config,
                            const GenerationCallback& on_generation) {
    Cmaes strategy(config);
    while (!strategy.should_stop()) {
        const auto candidates = strategy.ask();
        const auto costs = evaluator(candidates);
        strategy.tell(candidates, costs);
        if (on_generation) on_generation(strategy.generation(), candidates, costs);
    }
    return strategy.result();
}

} // namespace stirsap
