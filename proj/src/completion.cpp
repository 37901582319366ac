#include "stto/completion.hpp"

#include <cmath>

namespace stto {

double default_init_scale(const SparseObservations& obs, const TTRank& rank) {
    const auto values = obs.values();
    const double count = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= count;
    double var = 0.0;
    double sq = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
        sq += v * v;
    }
    double target = std::sqrt(var / count);
    if (!(target > 0.0)) target = std::sqrt(sq / count);
    if (!(target > 0.0)) target = 1.0;
    return matched_init_scale(rank, target);
}

CompletionResult complete(const SparseObservations& obs, const CompletionOptions& opts) {
    const double scale = opts.init_scale.value_or(default_init_scale(obs, opts.rank));
    const TTCores start = random_init(obs.shape(), opts.rank, opts.seed, scale);

    ObjectiveFn fg = [&](std::span<const double> x) {
        auto r = objective_and_gradient(unflatten_params(start, x), obs, opts.eval);
        return std::pair{r.objective, std::move(r.gradient)};
    };
    OptimizeResult opt = minimize(fg, flatten_params(start), opts.optimizer);
    return {unflatten_params(start, opt.x), std::move(opt.report), scale};
}

}  // namespace stto
