#pragma once

#include "stto/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stto {

/// Rank chain r_0..r_N with r_0 = r_N = 1.
class TTRank {
public:
    TTRank() = default;
    explicit TTRank(std::vector<std::size_t> ranks);
    TTRank(std::initializer_list<std::size_t> ranks) : TTRank(std::vector<std::size_t>(ranks)) {}

    /// (1, r, r, ..., r, 1) for an order-N shape.
    static TTRank uniform(std::size_t order, std::size_t r);

    [[nodiscard]] std::size_t operator[](std::size_t n) const { return ranks_[n]; }
    [[nodiscard]] std::size_t length() const noexcept { return ranks_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& values() const noexcept { return ranks_; }
    [[nodiscard]] std::size_t max() const noexcept;

    /// "1-8-8-1"
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const TTRank&, const TTRank&) = default;

private:
    std::vector<std::size_t> ranks_;
};

/// Caps each r_n at min(I_1...I_n, I_{n+1}...I_N), the largest rank a
/// tensor of this shape can have across that split.
[[nodiscard]] TTRank cap_ranks(const TensorShape& shape, const TTRank& rank);

/// Immutable tensor-train: N cores, core n of size r_{n-1} x I_n x r_n.
///
/// Parameters live in one flat buffer, core 1 first, each core column-major
/// so that element (a, i, b) of core n sits at
/// offset(n) + a + r_{n-1} * (i + I_n * b). Lateral slice i of core n is the
/// r_{n-1} x r_n matrix G^(n)_i.
class TTCores {
public:
    TTCores() = default;
    TTCores(TensorShape shape, TTRank rank, std::vector<double> params);

    /// All-zero cores.
    static TTCores zeros(TensorShape shape, TTRank rank);

    [[nodiscard]] const TensorShape& shape() const noexcept { return shape_; }
    [[nodiscard]] const TTRank& rank() const noexcept { return rank_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.order(); }
    [[nodiscard]] std::size_t param_count() const noexcept { return params_.size(); }
    [[nodiscard]] std::span<const double> params() const noexcept { return params_; }

    /// Offset of core n (0-based) within params().
    [[nodiscard]] std::size_t core_offset(std::size_t n) const { return offsets_[n]; }
    [[nodiscard]] std::span<const double> core(std::size_t n) const;

    /// Element (a, i, b) of core n, all 0-based.
    [[nodiscard]] double element(std::size_t n, std::size_t a, std::size_t i, std::size_t b) const;

    friend bool operator==(const TTCores& x, const TTCores& y) {
        return x.shape_ == y.shape_ && x.rank_ == y.rank_ && x.params_ == y.params_;
    }

private:
    TensorShape shape_;
    TTRank rank_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;  // N + 1 entries, last = param_count
};

/// Σ_n r_{n-1} I_n r_n; throws ShapeError when the rank chain does not fit the shape.
[[nodiscard]] std::size_t param_count(const TensorShape& shape, const TTRank& rank);

/// I.i.d. N(0, scale^2) core entries, deterministic for a fixed seed.
[[nodiscard]] TTCores random_init(const TensorShape& shape, const TTRank& rank,
                                  std::uint64_t seed, double scale);

/// Entry scale that gives reconstructed entries a standard deviation of
/// `target` at random_init: each entry is a sum of r_1...r_{N-1} products
/// of N independent factors, so scale^(2N) * Π r_n = target^2.
[[nodiscard]] double matched_init_scale(const TTRank& rank, double target);

/// Product of the selected lateral slices, evaluated as a running row vector.
[[nodiscard]] double tt_entry(const TTCores& cores, const MultiIndex& idx);

/// Same as tt_entry with 0-based coordinates and no bounds check.
[[nodiscard]] double tt_entry_unchecked(const TTCores& cores, std::span<const std::uint32_t> idx0);

/// Default materialization limit for tt_full, in elements.
inline constexpr std::size_t kDefaultFullLimit = std::size_t{1} << 27;

/// Dense reconstruction. Throws CapacityError above `limit` elements.
[[nodiscard]] DenseTensor tt_full(const TTCores& cores, std::size_t limit = kDefaultFullLimit);

[[nodiscard]] std::vector<double> flatten_params(const TTCores& cores);
[[nodiscard]] TTCores unflatten_params(const TTCores& like, std::span<const double> flat);

/// Model file: line 1 N, line 2 sizes, line 3 ranks, then one parameter per line.
void save_model(const std::filesystem::path& path, const TTCores& cores);
[[nodiscard]] TTCores load_model(const std::filesystem::path& path);

}  // namespace stto
