#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace stto {

enum class Method { GradientDescent, NcgHs };

enum class Termination { MaxIters, GradTol, LineSearchFailure };

[[nodiscard]] std::string_view to_string(Method m) noexcept;
[[nodiscard]] std::string_view to_string(Termination t) noexcept;

/// Optimizer settings; validate() enforces the documented ranges.
struct OptimizeConfig {
    Method method = Method::NcgHs;
    std::size_t max_iters = 200;
    /// Stop when the gradient infinity norm drops below this; 0 disables.
    double grad_tol = 0.0;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.1;
    double initial_step = 1.0;
    std::size_t max_line_search_evals = 25;
    /// Restart NCG with steepest descent every this many iterations; 0 means
    /// the number of parameters.
    std::size_t restart_every = 0;

    void validate() const;
};

struct IterationRecord {
    double objective = 0.0;       // after the step
    double grad_norm = 0.0;       // infinity norm after the step
    double step = 0.0;
    double directional = 0.0;     // g_kᵀd_k before the step
    double curvature = 0.0;       // g_{k+1}ᵀd_k after the step
    std::size_t evaluations = 0;  // line-search evaluations for this step
};

struct OptimizeReport {
    double initial_objective = 0.0;
    double initial_grad_norm = 0.0;
    std::vector<IterationRecord> trace;
    Termination termination = Termination::MaxIters;
    std::size_t evaluations = 0;

    [[nodiscard]] std::size_t iterations() const noexcept { return trace.size(); }
    [[nodiscard]] double final_objective() const noexcept {
        return trace.empty() ? initial_objective : trace.back().objective;
    }
};

/// Objective value and gradient at a point.
using ObjectiveFn = std::function<std::pair<double, std::vector<double>>(std::span<const double>)>;

struct OptimizeResult {
    std::vector<double> x;
    OptimizeReport report;
};

/// Hestenes-Stiefel coefficient g_newᵀ(g_new - g_old) / d_oldᵀ(g_new - g_old),
/// clamped at zero; zero when the denominator vanishes.
[[nodiscard]] double hs_beta(std::span<const double> g_new, std::span<const double> g_old,
                             std::span<const double> d_old);

/// Result of a strong-Wolfe line search along d from x.
struct LineSearchResult {
    bool converged = false;
    double step = 0.0;
    double f = 0.0;
    double derivative = 0.0;  // gradient along d at the accepted step
    std::vector<double> x;
    std::vector<double> g;
    std::size_t evaluations = 0;
};

/// Moré-Thuente search for a step satisfying
///   f(x + αd) <= f(x) + c1 α gᵀd  and  |g(x + αd)ᵀd| <= c2 |gᵀd|.
/// Requires gᵀd < 0.
[[nodiscard]] LineSearchResult line_search(const ObjectiveFn& fg, std::span<const double> x,
                                           double f, std::span<const double> g,
                                           std::span<const double> d, double initial_step,
                                           const OptimizeConfig& cfg);

/// Minimizes fg from x0. Throws NumericError on a non-finite objective or gradient.
[[nodiscard]] OptimizeResult minimize(const ObjectiveFn& fg, std::vector<double> x0,
                                      const OptimizeConfig& cfg);

}  // namespace stto
