#include "stto/stto.hpp"

#include "stto/error.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

namespace stto {

SparseObservations::SparseObservations(TensorShape shape, std::vector<Observation> entries)
    : shape_(std::move(shape)) {
    if (entries.empty()) {
        throw ArgumentError("observation set must contain at least one entry");
    }
    const std::size_t order = shape_.order();
    if (shape_.element_count() > 0) {
        for (std::size_t n = 0; n < order; ++n) {
            if (shape_.size(n) > UINT32_MAX) {
                throw ShapeError("mode sizes above 2^32 - 1 are not supported");
            }
        }
    }

    std::vector<std::size_t> lin(entries.size());
    for (std::size_t m = 0; m < entries.size(); ++m) {
        lin[m] = lin_index(shape_, entries[m].idx);
    }
    std::vector<std::size_t> order_of(entries.size());
    std::iota(order_of.begin(), order_of.end(), std::size_t{0});
    std::sort(order_of.begin(), order_of.end(),
              [&](std::size_t a, std::size_t b) { return lin[a] < lin[b]; });

    coords_.resize(entries.size() * order);
    values_.resize(entries.size());
    for (std::size_t k = 0; k < order_of.size(); ++k) {
        const std::size_t m = order_of[k];
        if (k > 0 && lin[m] == lin[order_of[k - 1]]) {
            std::string cell;
            for (std::size_t c : entries[m].idx.coords()) cell += (cell.empty() ? "" : " ") + std::to_string(c);
            throw ArgumentError("duplicate observation at index (" + cell + ")");
        }
        for (std::size_t n = 0; n < order; ++n) {
            coords_[k * order + n] = static_cast<std::uint32_t>(entries[m].idx[n] - 1);
        }
        values_[k] = entries[m].value;
    }
}

MultiIndex SparseObservations::index(std::size_t m) const {
    auto c = index0(m);
    std::vector<std::size_t> coords(c.size());
    for (std::size_t n = 0; n < c.size(); ++n) coords[n] = std::size_t{c[n]} + 1;
    return MultiIndex(std::move(coords));
}

std::vector<Observation> SparseObservations::entries() const {
    std::vector<Observation> out(count());
    for (std::size_t m = 0; m < count(); ++m) {
        out[m] = {index(m), values_[m]};
    }
    return out;
}

SliceProducts slice_products(const TTCores& cores, const MultiIndex& idx) {
    check_bounds(cores.shape(), idx);
    const std::size_t order = cores.order();
    const TTRank& rank = cores.rank();
    SliceProducts out;
    out.prefix.resize(order + 1);
    out.suffix.resize(order + 1);

    out.prefix[0] = {1.0};
    for (std::size_t n = 0; n < order; ++n) {
        const std::size_t rl = rank[n];
        const std::size_t rr = rank[n + 1];
        const std::size_t i = idx[n] - 1;
        out.prefix[n + 1].assign(rr, 0.0);
        for (std::size_t b = 0; b < rr; ++b) {
            double s = 0.0;
            for (std::size_t a = 0; a < rl; ++a) s += out.prefix[n][a] * cores.element(n, a, i, b);
            out.prefix[n + 1][b] = s;
        }
    }
    out.suffix[order] = {1.0};
    for (std::size_t n = order; n-- > 0;) {
        const std::size_t rl = rank[n];
        const std::size_t rr = rank[n + 1];
        const std::size_t i = idx[n] - 1;
        out.suffix[n].assign(rl, 0.0);
        for (std::size_t a = 0; a < rl; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < rr; ++b) s += cores.element(n, a, i, b) * out.suffix[n + 1][b];
            out.suffix[n][a] = s;
        }
    }
    return out;
}

double split_product(const TTCores& cores, const SliceProducts& products, const MultiIndex& idx,
                     std::size_t n) {
    if (n < 1 || n > cores.order()) {
        throw ArgumentError("split point must lie in 1..N");
    }
    const std::size_t k = n - 1;
    const std::size_t i = idx[k] - 1;
    double total = 0.0;
    for (std::size_t b = 0; b < cores.rank()[k + 1]; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < cores.rank()[k]; ++a) {
            s += products.prefix[k][a] * cores.element(k, a, i, b);
        }
        total += s * products.suffix[k + 1][b];
    }
    return total;
}

namespace {

void check_compatible(const TTCores& cores, const SparseObservations& obs) {
    if (cores.shape() != obs.shape()) {
        throw ShapeError("cores of shape " + cores.shape().to_string() +
                         " do not match observations of shape " + obs.shape().to_string());
    }
}

// Evaluates observations [first, last). When grad is non-null the slice
// gradients are accumulated into it.
class Kernel {
public:
    explicit Kernel(const TTCores& cores) : cores_(cores) {
        const std::size_t order = cores.order();
        prefix_offset_.resize(order + 1);
        std::size_t total = 0;
        for (std::size_t n = 0; n <= order; ++n) {
            prefix_offset_[n] = total;
            total += cores.rank()[n];
        }
        prefix_.resize(total);
        suffix_.resize(cores.rank().max());
        next_.resize(cores.rank().max());
    }

    double run(const SparseObservations& obs, std::size_t first, std::size_t last, double* grad) {
        const std::size_t order = cores_.order();
        const TTRank& rank = cores_.rank();
        const double* params = cores_.params().data();
        double f = 0.0;

        for (std::size_t m = first; m < last; ++m) {
            auto idx = obs.index0(m);

            prefix_[0] = 1.0;
            for (std::size_t n = 0; n < order; ++n) {
                const std::size_t rl = rank[n];
                const std::size_t rr = rank[n + 1];
                const std::size_t col_stride = rl * cores_.shape().size(n);
                const double* slice = params + cores_.core_offset(n) + rl * idx[n];
                const double* row = prefix_.data() + prefix_offset_[n];
                double* out = prefix_.data() + prefix_offset_[n + 1];
                for (std::size_t b = 0; b < rr; ++b) {
                    const double* col = slice + col_stride * b;
                    double s = 0.0;
                    for (std::size_t a = 0; a < rl; ++a) s += row[a] * col[a];
                    out[b] = s;
                }
            }
            const double x = prefix_[prefix_offset_[order]];
            const double residual = x - obs.value(m);
            f += 0.5 * residual * residual;
            if (grad == nullptr) continue;

            suffix_[0] = 1.0;
            for (std::size_t n = order; n-- > 0;) {
                const std::size_t rl = rank[n];
                const std::size_t rr = rank[n + 1];
                const std::size_t col_stride = rl * cores_.shape().size(n);
                const std::size_t slice_off = cores_.core_offset(n) + rl * idx[n];
                const double* row = prefix_.data() + prefix_offset_[n];

                double* g = grad + slice_off;
                for (std::size_t b = 0; b < rr; ++b) {
                    const double c = residual * suffix_[b];
                    double* gcol = g + col_stride * b;
                    for (std::size_t a = 0; a < rl; ++a) gcol[a] += c * row[a];
                }
                if (n == 0) break;

                const double* slice = params + slice_off;
                std::fill(next_.begin(), next_.begin() + static_cast<std::ptrdiff_t>(rl), 0.0);
                for (std::size_t b = 0; b < rr; ++b) {
                    const double s = suffix_[b];
                    const double* col = slice + col_stride * b;
                    for (std::size_t a = 0; a < rl; ++a) next_[a] += col[a] * s;
                }
                std::swap(suffix_, next_);
            }
        }
        return f;
    }

private:
    const TTCores& cores_;
    std::vector<std::size_t> prefix_offset_;
    std::vector<double> prefix_;
    std::vector<double> suffix_;
    std::vector<double> next_;
};

ObjectiveGradient evaluate(const TTCores& cores, const SparseObservations& obs,
                           const EvalOptions& opts, bool with_gradient) {
    check_compatible(cores, obs);
    ObjectiveGradient out;
    if (with_gradient) out.gradient.assign(cores.param_count(), 0.0);

    const std::size_t total = obs.count();
    const std::size_t chunks =
        std::clamp<std::size_t>(opts.threads, 1, std::max<std::size_t>(1, total));
    if (chunks == 1) {
        Kernel kernel(cores);
        out.objective = kernel.run(obs, 0, total, with_gradient ? out.gradient.data() : nullptr);
        return out;
    }

    std::vector<double> partial_f(chunks, 0.0);
    std::vector<std::vector<double>> partial_g(chunks);
    {
        std::vector<std::jthread> workers;
        workers.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) {
            workers.emplace_back([&, c] {
                const std::size_t first = total * c / chunks;
                const std::size_t last = total * (c + 1) / chunks;
                if (with_gradient) partial_g[c].assign(cores.param_count(), 0.0);
                Kernel kernel(cores);
                partial_f[c] = kernel.run(obs, first, last,
                                          with_gradient ? partial_g[c].data() : nullptr);
            });
        }
    }
    for (std::size_t c = 0; c < chunks; ++c) {
        out.objective += partial_f[c];
        if (with_gradient) {
            for (std::size_t p = 0; p < out.gradient.size(); ++p) out.gradient[p] += partial_g[c][p];
        }
    }
    return out;
}

}  // namespace

double objective(const TTCores& cores, const SparseObservations& obs, const EvalOptions& opts) {
    return evaluate(cores, obs, opts, false).objective;
}

std::vector<double> gradient(const TTCores& cores, const SparseObservations& obs,
                             const EvalOptions& opts) {
    return evaluate(cores, obs, opts, true).gradient;
}

ObjectiveGradient objective_and_gradient(const TTCores& cores, const SparseObservations& obs,
                                         const EvalOptions& opts) {
    return evaluate(cores, obs, opts, true);
}

std::vector<double> reconstruct(const TTCores& cores, std::span<const MultiIndex> at) {
    std::vector<double> out(at.size());
    std::vector<std::uint32_t> idx0(cores.order());
    for (std::size_t k = 0; k < at.size(); ++k) {
        check_bounds(cores.shape(), at[k]);
        for (std::size_t n = 0; n < idx0.size(); ++n) {
            idx0[n] = static_cast<std::uint32_t>(at[k][n] - 1);
        }
        out[k] = tt_entry_unchecked(cores, idx0);
    }
    return out;
}

}  // namespace stto
