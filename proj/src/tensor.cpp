#include "stto/tensor.hpp"

#include "stto/error.hpp"

#include <cmath>
#include <limits>

namespace stto {

TensorShape::TensorShape(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw ShapeError("tensor shape must have at least one mode");
    }
    count_ = 1;
    for (std::size_t n = 0; n < sizes_.size(); ++n) {
        const std::size_t s = sizes_[n];
        if (s == 0) {
            throw ShapeError("mode " + std::to_string(n + 1) + " has size zero");
        }
        if (count_ > std::numeric_limits<std::size_t>::max() / s) {
            throw ShapeError("element count of shape overflows the index range");
        }
        count_ *= s;
    }
}

TensorShape::TensorShape(std::initializer_list<std::size_t> sizes)
    : TensorShape(std::vector<std::size_t>(sizes)) {}

std::string TensorShape::to_string() const {
    std::string out;
    for (std::size_t n = 0; n < sizes_.size(); ++n) {
        if (n > 0) out += 'x';
        out += std::to_string(sizes_[n]);
    }
    return out;
}

void check_bounds(const TensorShape& shape, const MultiIndex& idx) {
    if (idx.order() != shape.order()) {
        throw BoundsError("multi-index has " + std::to_string(idx.order()) +
                          " coordinates, shape has " + std::to_string(shape.order()) + " modes");
    }
    for (std::size_t n = 0; n < shape.order(); ++n) {
        if (idx[n] < 1 || idx[n] > shape.size(n)) {
            throw BoundsError("index " + std::to_string(idx[n]) + " out of bounds in mode " +
                              std::to_string(n + 1) + " of size " +
                              std::to_string(shape.size(n)));
        }
    }
}

std::size_t lin_index(const TensorShape& shape, const MultiIndex& idx) {
    check_bounds(shape, idx);
    std::size_t lin = 0;
    std::size_t stride = 1;
    for (std::size_t n = 0; n < shape.order(); ++n) {
        lin += (idx[n] - 1) * stride;
        stride *= shape.size(n);
    }
    return lin;
}

MultiIndex multi_index(const TensorShape& shape, std::size_t lin) {
    if (lin >= shape.element_count()) {
        throw BoundsError("linear index " + std::to_string(lin) + " out of range for " +
                          std::to_string(shape.element_count()) + " elements");
    }
    std::vector<std::size_t> coords(shape.order());
    for (std::size_t n = 0; n < shape.order(); ++n) {
        coords[n] = lin % shape.size(n) + 1;
        lin /= shape.size(n);
    }
    return MultiIndex(std::move(coords));
}

DenseTensor::DenseTensor(TensorShape shape)
    : shape_(std::move(shape)), values_(shape_.element_count(), 0.0) {}

DenseTensor::DenseTensor(TensorShape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_.element_count()) {
        throw ShapeError("value count " + std::to_string(values_.size()) +
                         " does not match shape " + shape_.to_string());
    }
}

DenseTensor reshape(const DenseTensor& t, const TensorShape& new_shape) {
    if (new_shape.element_count() != t.shape().element_count()) {
        throw ShapeError("cannot reshape " + t.shape().to_string() + " to " +
                         new_shape.to_string());
    }
    return DenseTensor(new_shape, std::vector<double>(t.values().begin(), t.values().end()));
}

namespace {

void check_permutation(std::span<const std::size_t> perm, std::size_t order) {
    if (perm.size() != order) {
        throw ArgumentError("permutation has " + std::to_string(perm.size()) +
                            " entries, expected " + std::to_string(order));
    }
    std::vector<bool> seen(order, false);
    for (std::size_t p : perm) {
        if (p < 1 || p > order || seen[p - 1]) {
            throw ArgumentError("not a permutation of 1.." + std::to_string(order));
        }
        seen[p - 1] = true;
    }
}

}  // namespace

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    check_permutation(perm, perm.size());
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        inv[perm[k] - 1] = k + 1;
    }
    return inv;
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    const TensorShape& in_shape = t.shape();
    const std::size_t order = in_shape.order();
    check_permutation(perm, order);

    std::vector<std::size_t> in_strides(order);
    std::size_t stride = 1;
    for (std::size_t n = 0; n < order; ++n) {
        in_strides[n] = stride;
        stride *= in_shape.size(n);
    }

    std::vector<std::size_t> out_sizes(order);
    std::vector<std::size_t> step(order);  // input stride of each output mode
    for (std::size_t k = 0; k < order; ++k) {
        out_sizes[k] = in_shape.size(perm[k] - 1);
        step[k] = in_strides[perm[k] - 1];
    }

    TensorShape out_shape(out_sizes);
    std::vector<double> out(out_shape.element_count());
    std::span<const double> in = t.values();

    // Odometer over output coordinates, tracking the matching input offset.
    std::vector<std::size_t> counter(order, 0);
    std::size_t src = 0;
    for (std::size_t dst = 0; dst < out.size(); ++dst) {
        out[dst] = in[src];
        for (std::size_t k = 0; k < order; ++k) {
            if (++counter[k] < out_sizes[k]) {
                src += step[k];
                break;
            }
            src -= (out_sizes[k] - 1) * step[k];
            counter[k] = 0;
        }
    }
    return DenseTensor(std::move(out_shape), std::move(out));
}

double inner_product(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("inner product of " + a.shape().to_string() + " and " +
                         b.shape().to_string());
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double frobenius_norm(const DenseTensor& t) { return std::sqrt(inner_product(t, t)); }

}  // namespace stto
