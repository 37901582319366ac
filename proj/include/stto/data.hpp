#pragma once

#include "stto/stto.hpp"
#include "stto/tensor.hpp"
#include "stto/tt.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace stto {

// ---------------------------------------------------------------------------
// Synthetic data

/// sin(t/4) cos(t²) at t_k = (k + 1) * step for the column-major offset k.
[[nodiscard]] DenseTensor gen_oscillating(const TensorShape& shape, double step = 1.0);

/// Grid step that spreads the samples over (0, domain].
[[nodiscard]] double oscillating_step(const TensorShape& shape, double domain);

/// tt_full of random_init(shape, rank, seed, 1).
[[nodiscard]] DenseTensor gen_tt_random(const TensorShape& shape, const TTRank& rank,
                                        std::uint64_t seed,
                                        std::size_t limit = kDefaultFullLimit);

// ---------------------------------------------------------------------------
// Missing-data masks

/// Observed flag per cell in column-major order; at least one cell observed.
class MissingMask {
public:
    MissingMask() = default;
    MissingMask(TensorShape shape, std::vector<bool> observed);

    [[nodiscard]] const TensorShape& shape() const noexcept { return shape_; }
    [[nodiscard]] bool observed(std::size_t lin) const { return observed_[lin]; }
    [[nodiscard]] const std::vector<bool>& flags() const noexcept { return observed_; }
    [[nodiscard]] std::size_t observed_count() const noexcept { return observed_count_; }
    [[nodiscard]] std::size_t missing_count() const noexcept {
        return observed_.size() - observed_count_;
    }

    friend bool operator==(const MissingMask&, const MissingMask&) = default;

private:
    TensorShape shape_;
    std::vector<bool> observed_;
    std::size_t observed_count_ = 0;
};

/// Exactly round((1 - missing_rate) * cells) observed cells, picked by a seeded shuffle.
[[nodiscard]] MissingMask mask_random(const TensorShape& shape, double missing_rate,
                                      std::uint64_t seed);

/// Removes whole image rows (1-based) across every column and channel.
[[nodiscard]] MissingMask mask_rows(const TensorShape& image_shape,
                                    std::span<const std::size_t> rows);

/// Removes a height x width rectangle whose 1-based top-left pixel is (top, left).
[[nodiscard]] MissingMask mask_block(const TensorShape& image_shape, std::size_t top,
                                     std::size_t left, std::size_t height, std::size_t width);

/// Observed cells of t, in column-major order.
[[nodiscard]] SparseObservations extract_observations(const DenseTensor& t,
                                                      const MissingMask& mask);

// ---------------------------------------------------------------------------
// Image tensorization

/// Tensorized shape of a 2^k x 2^k x 3 image: (4, ..., 4, 3) with k fours.
[[nodiscard]] TensorShape tensorized_shape(const TensorShape& image_shape);

/// Reshape to (2,...,2, 2,...,2, 3), interleave row and column bits with the
/// permutation (1, k+1, 2, k+2, ..., k, 2k, 2k+1), reshape to (4,...,4, 3).
/// Mode 1 of the result walks a 2x2 pixel block; later modes walk
/// successively coarser blocks.
[[nodiscard]] DenseTensor tensorize_image(const DenseTensor& image);
[[nodiscard]] DenseTensor detensorize_image(const DenseTensor& tensorized);

[[nodiscard]] MissingMask tensorize_mask(const MissingMask& mask);
[[nodiscard]] MissingMask detensorize_mask(const MissingMask& mask);

// ---------------------------------------------------------------------------
// Metrics

/// ‖est - truth‖_F / ‖truth‖_F.
[[nodiscard]] double rse(const DenseTensor& est, const DenseTensor& truth);

/// 10 log10(255² / MSE) over all pixels and channels; +inf on an exact match.
[[nodiscard]] double psnr(const DenseTensor& est, const DenseTensor& truth);

struct MetricsResult {
    double rse = 0.0;
    std::optional<double> psnr;
};

/// Observed cells from `observed`, the rest from `model`.
[[nodiscard]] DenseTensor fill_missing(const DenseTensor& observed, const DenseTensor& model,
                                       const MissingMask& mask);

/// Every missing cell replaced by the mean of the observed cells.
[[nodiscard]] DenseTensor mean_fill(const DenseTensor& observed, const MissingMask& mask);

// ---------------------------------------------------------------------------
// Files

/// Checks an (H, W, 3) shape; throws ShapeError otherwise.
void check_image_shape(const TensorShape& shape);

/// Binary PPM (P6, maxval 255) into an (H, W, 3) tensor with values 0..255.
[[nodiscard]] DenseTensor load_image(const std::filesystem::path& path);

/// Values are clamped to [0, 255] and rounded half away from zero.
void save_image(const std::filesystem::path& path, const DenseTensor& image);

/// `stto-sparse v1` text format.
[[nodiscard]] SparseObservations load_sparse(const std::filesystem::path& path);
void save_sparse(const std::filesystem::path& path, const SparseObservations& obs);

/// `stto-dense v1` text format: header, N, sizes, then one value per line column-major.
[[nodiscard]] DenseTensor load_dense(const std::filesystem::path& path);
void save_dense(const std::filesystem::path& path, const DenseTensor& t);

}  // namespace stto
