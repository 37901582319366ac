#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace stto {

/// Sizes I_1..I_N of an N-way array. Every size is at least one and the
/// element count must fit in std::size_t.
class TensorShape {
public:
    TensorShape() = default;
    explicit TensorShape(std::vector<std::size_t> sizes);
    TensorShape(std::initializer_list<std::size_t> sizes);

    [[nodiscard]] std::size_t order() const noexcept { return sizes_.size(); }
    [[nodiscard]] std::size_t size(std::size_t mode) const { return sizes_.at(mode); }
    [[nodiscard]] const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    [[nodiscard]] std::size_t element_count() const noexcept { return count_; }

    /// "26x26x26"
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const TensorShape&, const TensorShape&) = default;

private:
    std::vector<std::size_t> sizes_;
    std::size_t count_ = 0;
};

/// 1-based coordinates (i_1, ..., i_N).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<std::size_t> coords) : coords_(std::move(coords)) {}
    MultiIndex(std::initializer_list<std::size_t> coords) : coords_(coords) {}

    [[nodiscard]] std::size_t order() const noexcept { return coords_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t mode) const { return coords_[mode]; }
    [[nodiscard]] const std::vector<std::size_t>& coords() const noexcept { return coords_; }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<std::size_t> coords_;
};

/// Throws BoundsError naming the first mode whose coordinate is outside [1, I_n].
void check_bounds(const TensorShape& shape, const MultiIndex& idx);

/// Column-major offset of a 1-based multi-index: (i_1-1) + (i_2-1)*I_1 + ...
[[nodiscard]] std::size_t lin_index(const TensorShape& shape, const MultiIndex& idx);

/// Inverse of lin_index.
[[nodiscard]] MultiIndex multi_index(const TensorShape& shape, std::size_t lin);

/// Contiguous column-major array of doubles.
class DenseTensor {
public:
    DenseTensor() = default;
    /// Zero-filled tensor.
    explicit DenseTensor(TensorShape shape);
    DenseTensor(TensorShape shape, std::vector<double> values);

    [[nodiscard]] const TensorShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] double operator[](std::size_t lin) const { return values_[lin]; }
    [[nodiscard]] double& operator[](std::size_t lin) { return values_[lin]; }
    [[nodiscard]] double at(const MultiIndex& idx) const { return values_[lin_index(shape_, idx)]; }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    TensorShape shape_;
    std::vector<double> values_;
};

/// Same values, new shape. Element counts must agree.
[[nodiscard]] DenseTensor reshape(const DenseTensor& t, const TensorShape& new_shape);

/// Mode permutation with 1-based labels: output mode k is input mode perm[k].
[[nodiscard]] DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

/// Inverse of a 1-based permutation.
[[nodiscard]] std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm);

[[nodiscard]] double inner_product(const DenseTensor& a, const DenseTensor& b);
[[nodiscard]] double frobenius_norm(const DenseTensor& t);

}  // namespace stto
