#pragma once

// Test-only helpers: random instances and independent reference
// computations that avoid the library's evaluation paths.

#include "stto/data.hpp"
#include "stto/stto.hpp"
#include "stto/tensor.hpp"
#include "stto/tt.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace stto::testing {

using Matrix = std::vector<std::vector<double>>;

/// The two-core example: G1 slices [1 2], [3 4]; G2 slices [5;6], [7;8].
inline TTCores example_cores() {
    // Column-major per core: core 1 is 1x2x2, core 2 is 2x2x1.
    return TTCores(TensorShape{2, 2}, TTRank{1, 2, 1}, {1, 3, 2, 4, 5, 6, 7, 8});
}

/// Slice i (0-based) of core n as an explicit r_{n-1} x r_n matrix, read
/// straight from the flat parameter layout.
inline Matrix slice_matrix(const TTCores& c, std::size_t n, std::size_t i) {
    const std::size_t rl = c.rank()[n];
    const std::size_t rr = c.rank()[n + 1];
    const std::size_t in = c.shape().size(n);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n; ++k) {
        offset += c.rank()[k] * c.shape().size(k) * c.rank()[k + 1];
    }
    Matrix m(rl, std::vector<double>(rr));
    for (std::size_t a = 0; a < rl; ++a) {
        for (std::size_t b = 0; b < rr; ++b) {
            m[a][b] = c.params()[offset + a + rl * i + rl * in * b];
        }
    }
    return m;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    Matrix out(x.size(), std::vector<double>(y.front().size(), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t k = 0; k < y.size(); ++k)
            for (std::size_t j = 0; j < y.front().size(); ++j) out[i][j] += x[i][k] * y[k][j];
    return out;
}

/// Entry by multiplying the full slice matrices left to right.
inline double oracle_entry(const TTCores& c, const std::vector<std::size_t>& idx1) {
    Matrix acc{{1.0}};
    for (std::size_t n = 0; n < c.order(); ++n) acc = matmul(acc, slice_matrix(c, n, idx1[n] - 1));
    return acc[0][0];
}

/// ½‖W ∗ (Y − X)‖² with the full model tensor materialized cell by cell.
inline double dense_weighted_objective(const TTCores& c, const SparseObservations& obs) {
    const TensorShape& shape = c.shape();
    std::vector<double> weight(shape.element_count(), 0.0);
    std::vector<double> data(shape.element_count(), 0.0);
    for (std::size_t m = 0; m < obs.count(); ++m) {
        std::size_t lin = 0, stride = 1;
        auto idx = obs.index(m);
        for (std::size_t n = 0; n < shape.order(); ++n) {
            lin += (idx[n] - 1) * stride;
            stride *= shape.size(n);
        }
        weight[lin] = 1.0;
        data[lin] = obs.value(m);
    }
    double total = 0.0;
    std::vector<std::size_t> idx(shape.order(), 1);
    for (std::size_t lin = 0; lin < shape.element_count(); ++lin) {
        const double r = weight[lin] * (data[lin] - oracle_entry(c, idx));
        total += r * r;
        for (std::size_t n = 0; n < idx.size(); ++n) {
            if (++idx[n] <= shape.size(n)) break;
            idx[n] = 1;
        }
    }
    return 0.5 * total;
}

/// Central differences of the sparse objective.
inline std::vector<double> finite_difference_gradient(const TTCores& c,
                                                      const SparseObservations& obs,
                                                      double eps) {
    std::vector<double> x = flatten_params(c);
    std::vector<double> out(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double keep = x[p];
        x[p] = keep + eps;
        const double fp = objective(unflatten_params(c, x), obs);
        x[p] = keep - eps;
        const double fm = objective(unflatten_params(c, x), obs);
        x[p] = keep;
        out[p] = (fp - fm) / (2.0 * eps);
    }
    return out;
}

struct RandomInstance {
    TTCores cores;
    SparseObservations obs;
};

/// Random shape (order in [min_order, max_order], sizes <= max_size), random
/// ranks <= max_rank, Gaussian cores and ~target_m distinct observations.
inline RandomInstance random_instance(std::uint64_t seed, std::size_t min_order,
                                      std::size_t max_order, std::size_t max_size,
                                      std::size_t max_rank, std::size_t target_m) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t order = pick(min_order, max_order);
    std::vector<std::size_t> sizes(order);
    for (auto& s : sizes) s = pick(2, max_size);
    std::vector<std::size_t> ranks(order + 1, 1);
    for (std::size_t n = 1; n < order; ++n) ranks[n] = pick(1, max_rank);
    TensorShape shape(sizes);
    TTRank rank(ranks);
    TTCores cores = random_init(shape, rank, seed * 7919 + 1, 0.8);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::set<std::size_t> used;
    std::vector<Observation> entries;
    const std::size_t m = std::min(target_m, shape.element_count());
    while (entries.size() < m) {
        const std::size_t lin = pick(0, shape.element_count() - 1);
        if (!used.insert(lin).second) continue;
        entries.push_back({multi_index(shape, lin), normal(rng)});
    }
    return {std::move(cores), SparseObservations(shape, std::move(entries))};
}

/// Deterministic smooth 2^k x 2^k RGB test picture: colour gradients, a few
/// discs and bars, and a mild periodic texture. Values in [0, 255].
inline DenseTensor synthetic_image(std::size_t side) {
    DenseTensor img(TensorShape{side, side, 3});
    const double s = static_cast<double>(side);
    for (std::size_t col = 0; col < side; ++col) {
        for (std::size_t row = 0; row < side; ++row) {
            const double y = static_cast<double>(row) / s;
            const double x = static_cast<double>(col) / s;
            double rgb[3] = {60.0 + 120.0 * x, 50.0 + 100.0 * y, 140.0 - 60.0 * x * y};
            const double d1 = std::hypot(x - 0.35, y - 0.4);
            if (d1 < 0.22) {
                rgb[0] += 80.0 * (1.0 - d1 / 0.22);
                rgb[1] -= 20.0;
            }
            const double d2 = std::hypot(x - 0.72, y - 0.7);
            if (d2 < 0.15) {
                rgb[2] += 70.0;
                rgb[0] -= 30.0;
            }
            if (y > 0.82 && y < 0.9) {
                rgb[1] += 60.0;
            }
            const double tex = 8.0 * std::sin(12.0 * x + 3.0 * y) * std::cos(9.0 * y);
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(rgb[c] + tex, 0.0, 255.0);
                img[row + side * (col + side * c)] = std::round(v);
            }
        }
    }
    return img;
}

}  // namespace stto::testing
