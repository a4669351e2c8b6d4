#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stirsap {

// (mu/mu_w, lambda) CMA-ES over a box-bounded real space. Strategy constants follow
// the standard tutorial parameterization; bounds are handled by resample-then-clip.
struct CmaesConfig {
    int dimension = 0;
    int population = 0;                 // 0 -> 4 + floor(3 ln n)
    int parents = 0;                    // 0 -> population/2
    Eigen::VectorXd initial_mean;
    double initial_step = 0.0;          // 0 -> 0.3 * smallest box width
    Eigen::VectorXd lower_bounds;
    Eigen::VectorXd upper_bounds;
    long max_evaluations = 10000;
    std::optional<double> target_cost;
    std::uint64_t seed = 1;

    int resolved_population() const;
    int resolved_parents() const;
    double resolved_step() const;
    void validate() const;
};

enum class Termination { TARGET_REACHED, BUDGET_EXHAUSTED, STAGNATION };
std::string to_string(Termination t);

struct GenerationStats {
    long generation = 0;
    long eval_count = 0;
    double best_cost = 0.0;
    double median_cost = 0.0;
    double sigma = 0.0;
};

struct OptimizationResult {
    Eigen::VectorXd best_params;
    double best_cost = 0.0;
    long evaluations = 0;
    std::vector<GenerationStats> history;
    Termination termination = Termination::BUDGET_EXHAUSTED;
    std::uint64_t seed = 0;
};

// Deterministic scalar RNG owned by the optimizer: xoshiro256++ bits through an
// explicit Box-Muller transform, so candidate streams reproduce bit-for-bit on any
// platform and under any evaluation parallelism.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed);
    double normal();
    double uniform(); // [0, 1)
private:
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
    std::uint64_t next_u64();
};

class Cmaes {
public:
    explicit Cmaes(CmaesConfig config);

    // Samples lambda candidates from N(mean, sigma^2 C), consuming the RNG stream in
    // candidate-index order; out-of-bounds coordinates are resampled up to 100 times
    // per candidate, then clipped.
    std::vector<Eigen::VectorXd> ask();

    // Rank-based recombination (log-decreasing weights, ties broken by candidate
    // index), rank-one + rank-mu covariance update, cumulative step-size adaptation.
    // NaN costs lose against everything; an all-NaN generation throws.
    void tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& costs);

    bool should_stop() const;
    Termination termination_reason() const;
    OptimizationResult result() const;

    long generation() const { return generation_; }
    long evaluations() const { return evaluations_; }
    double sigma() const { return sigma_; }
    double best_cost() const { return best_cost_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const std::vector<GenerationStats>& history() const { return history_; }

private:
    void decompose();

    CmaesConfig cfg_;
    int n_ = 0, lambda_ = 0, mu_ = 0;
    Eigen::VectorXd weights_;
    double mu_eff_ = 0.0, c_sigma_ = 0.0, d_sigma_ = 0.0, c_c_ = 0.0, c1_ = 0.0, c_mu_ = 0.0;
    double chi_n_ = 0.0;

    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd eigvec_;       // B
    Eigen::VectorXd eigval_sqrt_;  // D
    double sigma_ = 0.0;
    Eigen::VectorXd path_sigma_;
    Eigen::VectorXd path_c_;
    long generation_ = 0;
    long evaluations_ = 0;

    std::vector<Eigen::VectorXd> last_y_; // (x - mean)/sigma per candidate

    Eigen::VectorXd best_params_;
    double best_cost_ = 0.0;
    bool has_best_ = false;
    std::vector<double> recent_best_;  // stagnation window
    std::vector<GenerationStats> history_;

    NormalSource rng_;
};

using CostFn = std::function<double(const Eigen::VectorXd&)>;
using BatchEvaluator = std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>;
using GenerationCallback =
    std::function<void(long generation, const std::vector<Eigen::VectorXd>&, const std::vector<double>&)>;

OptimizationResult optimize(const CostFn& cost_fn, const CmaesConfig& config);

// Same loop with a caller-supplied batch evaluator (e.g. a thread pool) and an
// optional per-generation observer for candidate dumps.
OptimizationResult optimize(const BatchEvaluator& evaluator, const CmaesConfig& config,
                            const GenerationCallback& on_generation);

} // namespace stirsap
