#include "stto/tt.hpp"

#include "stto/error.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stto {

TTRank::TTRank(std::vector<std::size_t> ranks) : ranks_(std::move(ranks)) {
    if (ranks_.size() < 2) {
        throw ShapeError("TT-rank needs at least two entries");
    }
    if (ranks_.front() != 1 || ranks_.back() != 1) {
        throw ShapeError("TT-rank must satisfy r_0 = r_N = 1");
    }
    for (std::size_t r : ranks_) {
        if (r == 0) throw ShapeError("TT-rank entries must be positive");
    }
}

TTRank TTRank::uniform(std::size_t order, std::size_t r) {
    std::vector<std::size_t> ranks(order + 1, r);
    ranks.front() = 1;
    ranks.back() = 1;
    return TTRank(std::move(ranks));
}

std::size_t TTRank::max() const noexcept {
    return ranks_.empty() ? 0 : *std::max_element(ranks_.begin(), ranks_.end());
}

std::string TTRank::to_string() const {
    std::string out;
    for (std::size_t n = 0; n < ranks_.size(); ++n) {
        if (n > 0) out += '-';
        out += std::to_string(ranks_[n]);
    }
    return out;
}

TTRank cap_ranks(const TensorShape& shape, const TTRank& rank) {
    const std::size_t order = shape.order();
    if (rank.length() != order + 1) {
        throw ShapeError("TT-rank has " + std::to_string(rank.length()) + " entries, expected " +
                         std::to_string(order + 1));
    }
    std::vector<std::size_t> out = rank.values();
    // Saturating products; the caps only matter while they are small.
    auto sat_mul = [](std::size_t a, std::size_t b) {
        return (b != 0 && a > SIZE_MAX / b) ? SIZE_MAX : a * b;
    };
    std::size_t left = 1;
    for (std::size_t n = 1; n < order; ++n) {
        left = sat_mul(left, shape.size(n - 1));
        std::size_t right = 1;
        for (std::size_t k = n; k < order; ++k) right = sat_mul(right, shape.size(k));
        out[n] = std::min({out[n], left, right});
    }
    return TTRank(std::move(out));
}

std::size_t param_count(const TensorShape& shape, const TTRank& rank) {
    if (rank.length() != shape.order() + 1) {
        throw ShapeError("TT-rank has " + std::to_string(rank.length()) + " entries, shape " +
                         shape.to_string() + " needs " + std::to_string(shape.order() + 1));
    }
    std::size_t total = 0;
    for (std::size_t n = 0; n < shape.order(); ++n) {
        total += rank[n] * shape.size(n) * rank[n + 1];
    }
    return total;
}

TTCores::TTCores(TensorShape shape, TTRank rank, std::vector<double> params)
    : shape_(std::move(shape)), rank_(std::move(rank)), params_(std::move(params)) {
    const std::size_t expected = stto::param_count(shape_, rank_);
    if (params_.size() != expected) {
        throw ShapeError("parameter vector has length " + std::to_string(params_.size()) +
                         ", cores need " + std::to_string(expected));
    }
    offsets_.resize(shape_.order() + 1);
    offsets_[0] = 0;
    for (std::size_t n = 0; n < shape_.order(); ++n) {
        offsets_[n + 1] = offsets_[n] + rank_[n] * shape_.size(n) * rank_[n + 1];
    }
}

TTCores TTCores::zeros(TensorShape shape, TTRank rank) {
    const std::size_t count = stto::param_count(shape, rank);
    return TTCores(std::move(shape), std::move(rank), std::vector<double>(count, 0.0));
}

std::span<const double> TTCores::core(std::size_t n) const {
    return std::span<const double>(params_).subspan(offsets_[n], offsets_[n + 1] - offsets_[n]);
}

double TTCores::element(std::size_t n, std::size_t a, std::size_t i, std::size_t b) const {
    const std::size_t rl = rank_[n];
    return params_[offsets_[n] + a + rl * (i + shape_.size(n) * b)];
}

TTCores random_init(const TensorShape& shape, const TTRank& rank, std::uint64_t seed,
                    double scale) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
        throw ArgumentError("initialization scale must be finite and non-negative");
    }
    std::vector<double> params(param_count(shape, rank));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& p : params) {
        p = scale * normal(rng);
    }
    return TTCores(shape, rank, std::move(params));
}

double matched_init_scale(const TTRank& rank, double target) {
    const std::size_t order = rank.length() - 1;
    double log_paths = 0.0;
    for (std::size_t n = 1; n < order; ++n) {
        log_paths += std::log(static_cast<double>(rank[n]));
    }
    return std::exp((std::log(target) - 0.5 * log_paths) / static_cast<double>(order));
}

double tt_entry_unchecked(const TTCores& cores, std::span<const std::uint32_t> idx0) {
    const std::size_t order = cores.order();
    const TTRank& rank = cores.rank();
    std::span<const double> params = cores.params();

    std::vector<double> row(rank.max());
    std::vector<double> next(rank.max());
    row[0] = 1.0;
    for (std::size_t n = 0; n < order; ++n) {
        const std::size_t rl = rank[n];
        const std::size_t rr = rank[n + 1];
        const double* slice = params.data() + cores.core_offset(n) + rl * idx0[n];
        const std::size_t col_stride = rl * cores.shape().size(n);
        for (std::size_t b = 0; b < rr; ++b) {
            const double* col = slice + col_stride * b;
            double s = 0.0;
            for (std::size_t a = 0; a < rl; ++a) s += row[a] * col[a];
            next[b] = s;
        }
        std::swap(row, next);
    }
    return row[0];
}

double tt_entry(const TTCores& cores, const MultiIndex& idx) {
    check_bounds(cores.shape(), idx);
    std::vector<std::uint32_t> idx0(idx.order());
    for (std::size_t n = 0; n < idx.order(); ++n) {
        idx0[n] = static_cast<std::uint32_t>(idx[n] - 1);
    }
    return tt_entry_unchecked(cores, idx0);
}

DenseTensor tt_full(const TTCores& cores, std::size_t limit) {
    const TensorShape& shape = cores.shape();
    if (shape.element_count() > limit) {
        throw CapacityError("shape " + shape.to_string() + " has " +
                            std::to_string(shape.element_count()) +
                            " elements, over the materialization limit of " +
                            std::to_string(limit));
    }
    const TTRank& rank = cores.rank();

    // acc is a (I_1...I_n) x r_n column-major matrix after absorbing core n.
    std::vector<double> acc(1, 1.0);
    std::size_t rows = 1;
    for (std::size_t n = 0; n < shape.order(); ++n) {
        const std::size_t rl = rank[n];
        const std::size_t rr = rank[n + 1];
        const std::size_t in = shape.size(n);
        std::span<const double> g = cores.core(n);
        std::vector<double> out(rows * in * rr, 0.0);
        for (std::size_t b = 0; b < rr; ++b) {
            for (std::size_t i = 0; i < in; ++i) {
                double* dst = out.data() + rows * (i + in * b);
                for (std::size_t a = 0; a < rl; ++a) {
                    const double w = g[a + rl * (i + in * b)];
                    const double* src = acc.data() + rows * a;
                    for (std::size_t p = 0; p < rows; ++p) dst[p] += src[p] * w;
                }
            }
        }
        acc = std::move(out);
        rows *= in;
    }
    return DenseTensor(shape, std::move(acc));
}

std::vector<double> flatten_params(const TTCores& cores) {
    return std::vector<double>(cores.params().begin(), cores.params().end());
}

TTCores unflatten_params(const TTCores& like, std::span<const double> flat) {
    if (flat.size() != like.param_count()) {
        throw ShapeError("flat parameter length " + std::to_string(flat.size()) +
                         " does not match param_count " + std::to_string(like.param_count()));
    }
    return TTCores(like.shape(), like.rank(), std::vector<double>(flat.begin(), flat.end()));
}

void save_model(const std::filesystem::path& path, const TTCores& cores) {
    auto out = detail::open_for_write(path);
    out << cores.order() << '\n';
    for (std::size_t n = 0; n < cores.order(); ++n) {
        out << (n ? " " : "") << cores.shape().size(n);
    }
    out << '\n';
    for (std::size_t n = 0; n < cores.rank().length(); ++n) {
        out << (n ? " " : "") << cores.rank()[n];
    }
    out << '\n';
    for (double p : cores.params()) {
        out << detail::format_double(p) << '\n';
    }
    detail::finish_write(out, path);
}

TTCores load_model(const std::filesystem::path& path) {
    detail::LineReader r(path);
    const std::size_t order = detail::parse_single_size(r, r.next("order"), "order");
    if (order == 0) r.fail("order must be positive");
    auto sizes = detail::parse_sizes(r, r.next("sizes"), order, "sizes");
    auto ranks = detail::parse_sizes(r, r.next("ranks"), order + 1, "ranks");
    if (ranks.front() != 1 || ranks.back() != 1) r.fail("ranks must start and end with 1");

    TensorShape shape(std::move(sizes));
    TTRank rank(std::move(ranks));
    std::vector<double> params(param_count(shape, rank));
    for (double& p : params) {
        std::string line = r.next("parameter value");
        auto toks = detail::split_ws(line);
        if (toks.size() != 1 || !detail::parse_double(toks[0], p)) {
            r.fail("invalid parameter value '" + line + "'");
        }
    }
    if (!r.at_end()) r.fail("trailing content after parameters");
    return TTCores(std::move(shape), std::move(rank), std::move(params));
}

}  // namespace stto
