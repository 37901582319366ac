#pragma once

#include "stto/tensor.hpp"
#include "stto/tt.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stto {

/// One observed cell.
struct Observation {
    MultiIndex idx;
    double value = 0.0;
};

/// M observed entries of a tensor, held in column-major order of their cells.
///
/// Entries are sorted on construction so that two observation sets holding
/// the same cells are identical objects regardless of input order. Indices
/// are stored 0-based, M x N row-wise; the public accessors are 1-based.
class SparseObservations {
public:
    SparseObservations() = default;
    /// Throws BoundsError for out-of-range indices, ArgumentError for an
    /// empty set or duplicate cells.
    SparseObservations(TensorShape shape, std::vector<Observation> entries);

    [[nodiscard]] const TensorShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t count() const noexcept { return values_.size(); }
    [[nodiscard]] double value(std::size_t m) const { return values_[m]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] MultiIndex index(std::size_t m) const;
    /// 0-based coordinates of observation m.
    [[nodiscard]] std::span<const std::uint32_t> index0(std::size_t m) const {
        return std::span<const std::uint32_t>(coords_).subspan(m * shape_.order(), shape_.order());
    }
    [[nodiscard]] std::vector<Observation> entries() const;

    friend bool operator==(const SparseObservations&, const SparseObservations&) = default;

private:
    TensorShape shape_;
    std::vector<std::uint32_t> coords_;
    std::vector<double> values_;
};

/// Prefix rows G^{<n} and suffix columns G^{>n} of one observed index.
///
/// prefix[n] has r_n entries (product of slices 1..n, so prefix[0] = [1]);
/// suffix[n] has r_n entries (product of slices n+1..N, so suffix[N] = [1]).
/// For every split n, prefix[n-1] * G^(n)_{i_n} * suffix[n] is the entry.
struct SliceProducts {
    std::vector<std::vector<double>> prefix;
    std::vector<std::vector<double>> suffix;
};

[[nodiscard]] SliceProducts slice_products(const TTCores& cores, const MultiIndex& idx);

/// Value of prefix[n-1] * G^(n)_{i_n} * suffix[n] for 1-based split point n.
[[nodiscard]] double split_product(const TTCores& cores, const SliceProducts& products,
                                   const MultiIndex& idx, std::size_t n);

/// Evaluation controls. threads > 1 splits observations into contiguous
/// chunks with per-chunk gradient buffers merged in chunk order, so results
/// depend on the thread count but not on scheduling.
struct EvalOptions {
    unsigned threads = 1;
};

struct ObjectiveGradient {
    double objective = 0.0;
    std::vector<double> gradient;
};

/// ½ Σ_m (y_m - x_m)².
[[nodiscard]] double objective(const TTCores& cores, const SparseObservations& obs,
                               const EvalOptions& opts = {});

/// ∂f/∂G^(n)_j = Σ_{m: i_n^m = j} (x_m - y_m) (G^{>n} G^{<n})^T, flattened like the cores.
[[nodiscard]] std::vector<double> gradient(const TTCores& cores, const SparseObservations& obs,
                                           const EvalOptions& opts = {});

/// Single pass producing both; identical to the separate calls.
[[nodiscard]] ObjectiveGradient objective_and_gradient(const TTCores& cores,
                                                       const SparseObservations& obs,
                                                       const EvalOptions& opts = {});

/// Model values at the requested cells.
[[nodiscard]] std::vector<double> reconstruct(const TTCores& cores, std::span<const MultiIndex> at);

}  // namespace stto
