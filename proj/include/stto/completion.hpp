#pragma once

#include "stto/optimizer.hpp"
#include "stto/stto.hpp"
#include "stto/tt.hpp"

#include <cstdint>
#include <optional>

namespace stto {

struct CompletionOptions {
    TTRank rank;
    OptimizeConfig optimizer;
    std::uint64_t seed = 0;
    /// Standard deviation of the initial core entries; matched to the data when unset.
    std::optional<double> init_scale;
    EvalOptions eval;
};

struct CompletionResult {
    TTCores cores;
    OptimizeReport report;
    double init_scale = 0.0;
};

/// Entry scale at which random cores reproduce the spread of the observed
/// values (their standard deviation, or RMS for constant data).
[[nodiscard]] double default_init_scale(const SparseObservations& obs, const TTRank& rank);

/// Random cores fitted to the observations by first-order optimization.
[[nodiscard]] CompletionResult complete(const SparseObservations& obs,
                                        const CompletionOptions& opts);

}  // namespace stto
