#include "stto/data.hpp"

#include "stto/error.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>

namespace stto {

DenseTensor gen_oscillating(const TensorShape& shape, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw ArgumentError("oscillating grid step must be positive");
    }
    std::vector<double> v(shape.element_count());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double t = static_cast<double>(k + 1) * step;
        v[k] = std::sin(t / 4.0) * std::cos(t * t);
    }
    return DenseTensor(shape, std::move(v));
}

double oscillating_step(const TensorShape& shape, double domain) {
    if (!(domain > 0.0) || !std::isfinite(domain)) {
        throw ArgumentError("oscillating domain must be positive");
    }
    return domain / static_cast<double>(shape.element_count());
}

DenseTensor gen_tt_random(const TensorShape& shape, const TTRank& rank, std::uint64_t seed,
                          std::size_t limit) {
    return tt_full(random_init(shape, rank, seed, 1.0), limit);
}

MissingMask::MissingMask(TensorShape shape, std::vector<bool> observed)
    : shape_(std::move(shape)), observed_(std::move(observed)) {
    if (observed_.size() != shape_.element_count()) {
        throw ShapeError("mask has " + std::to_string(observed_.size()) + " cells, shape " +
                         shape_.to_string() + " has " + std::to_string(shape_.element_count()));
    }
    observed_count_ = static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), true));
    if (observed_count_ == 0) {
        throw ArgumentError("mask leaves no observed cell");
    }
}

MissingMask mask_random(const TensorShape& shape, double missing_rate, std::uint64_t seed) {
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
        throw ArgumentError("missing rate must lie in [0, 1)");
    }
    const std::size_t cells = shape.element_count();
    const auto keep = static_cast<std::size_t>(
        std::llround((1.0 - missing_rate) * static_cast<double>(cells)));
    if (keep == 0) {
        throw ArgumentError("missing rate " + std::to_string(missing_rate) +
                            " leaves no observed cell");
    }
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<bool> observed(cells, false);
    for (std::size_t k = 0; k < keep; ++k) observed[order[k]] = true;
    return MissingMask(shape, std::move(observed));
}

void check_image_shape(const TensorShape& shape) {
    if (shape.order() != 3 || shape.size(2) != 3) {
        throw ShapeError("expected an H x W x 3 image, got " + shape.to_string());
    }
}

MissingMask mask_rows(const TensorShape& image_shape, std::span<const std::size_t> rows) {
    check_image_shape(image_shape);
    const std::size_t h = image_shape.size(0);
    const std::size_t w = image_shape.size(1);
    std::vector<bool> observed(image_shape.element_count(), true);
    for (std::size_t row : rows) {
        if (row < 1 || row > h) {
            throw BoundsError("row " + std::to_string(row) + " outside image height " +
                              std::to_string(h));
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t col = 0; col < w; ++col) {
                observed[(row - 1) + h * (col + w * c)] = false;
            }
        }
    }
    return MissingMask(image_shape, std::move(observed));
}

MissingMask mask_block(const TensorShape& image_shape, std::size_t top, std::size_t left,
                       std::size_t height, std::size_t width) {
    check_image_shape(image_shape);
    const std::size_t h = image_shape.size(0);
    const std::size_t w = image_shape.size(1);
    if (top < 1 || left < 1 || height == 0 || width == 0 || top - 1 + height > h ||
        left - 1 + width > w) {
        throw BoundsError("block (" + std::to_string(top) + "," + std::to_string(left) + "," +
                          std::to_string(height) + "," + std::to_string(width) +
                          ") outside " + std::to_string(h) + "x" + std::to_string(w) + " image");
    }
    std::vector<bool> observed(image_shape.element_count(), true);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t col = left - 1; col < left - 1 + width; ++col) {
            for (std::size_t row = top - 1; row < top - 1 + height; ++row) {
                observed[row + h * (col + w * c)] = false;
            }
        }
    }
    return MissingMask(image_shape, std::move(observed));
}

SparseObservations extract_observations(const DenseTensor& t, const MissingMask& mask) {
    if (t.shape() != mask.shape()) {
        throw ShapeError("tensor " + t.shape().to_string() + " and mask " +
                         mask.shape().to_string() + " differ in shape");
    }
    std::vector<Observation> entries;
    entries.reserve(mask.observed_count());
    for (std::size_t lin = 0; lin < t.size(); ++lin) {
        if (mask.observed(lin)) {
            entries.push_back({multi_index(t.shape(), lin), t[lin]});
        }
    }
    return SparseObservations(t.shape(), std::move(entries));
}

namespace {

// k such that the image is 2^k x 2^k x 3.
std::size_t image_bits(const TensorShape& shape) {
    if (shape.order() != 3 || shape.size(2) != 3 || shape.size(0) != shape.size(1) ||
        shape.size(0) < 2 || !std::has_single_bit(shape.size(0))) {
        throw ShapeError("tensorization needs a 2^k x 2^k x 3 image, got " + shape.to_string());
    }
    return static_cast<std::size_t>(std::countr_zero(shape.size(0)));
}

TensorShape binary_shape(std::size_t k) {
    std::vector<std::size_t> sizes(2 * k, 2);
    sizes.push_back(3);
    return TensorShape(std::move(sizes));
}

std::vector<std::size_t> interleave_permutation(std::size_t k) {
    std::vector<std::size_t> perm;
    perm.reserve(2 * k + 1);
    for (std::size_t j = 1; j <= k; ++j) {
        perm.push_back(j);
        perm.push_back(k + j);
    }
    perm.push_back(2 * k + 1);
    return perm;
}

std::size_t tensorized_bits(const TensorShape& shape) {
    const std::size_t n = shape.order();
    if (n < 2 || shape.size(n - 1) != 3) {
        throw ShapeError("not a tensorized image shape: " + shape.to_string());
    }
    for (std::size_t m = 0; m + 1 < n; ++m) {
        if (shape.size(m) != 4) {
            throw ShapeError("not a tensorized image shape: " + shape.to_string());
        }
    }
    return n - 1;
}

DenseTensor mask_to_tensor(const MissingMask& mask) {
    std::vector<double> v(mask.flags().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask.observed(i) ? 1.0 : 0.0;
    return DenseTensor(mask.shape(), std::move(v));
}

MissingMask tensor_to_mask(const DenseTensor& t) {
    std::vector<bool> flags(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) flags[i] = t[i] != 0.0;
    return MissingMask(t.shape(), std::move(flags));
}

}  // namespace

TensorShape tensorized_shape(const TensorShape& image_shape) {
    const std::size_t k = image_bits(image_shape);
    std::vector<std::size_t> sizes(k, 4);
    sizes.push_back(3);
    return TensorShape(std::move(sizes));
}

DenseTensor tensorize_image(const DenseTensor& image) {
    const std::size_t k = image_bits(image.shape());
    const auto perm = interleave_permutation(k);
    return reshape(permute(reshape(image, binary_shape(k)), perm), tensorized_shape(image.shape()));
}

DenseTensor detensorize_image(const DenseTensor& tensorized) {
    const std::size_t k = tensorized_bits(tensorized.shape());
    std::vector<std::size_t> interleaved(2 * k, 2);
    interleaved.push_back(3);
    const auto inv = inverse_permutation(interleave_permutation(k));
    const std::size_t side = std::size_t{1} << k;
    return reshape(permute(reshape(tensorized, TensorShape(std::move(interleaved))), inv),
                   TensorShape{side, side, 3});
}

MissingMask tensorize_mask(const MissingMask& mask) {
    return tensor_to_mask(tensorize_image(mask_to_tensor(mask)));
}

MissingMask detensorize_mask(const MissingMask& mask) {
    return tensor_to_mask(detensorize_image(mask_to_tensor(mask)));
}

double rse(const DenseTensor& est, const DenseTensor& truth) {
    if (est.shape() != truth.shape()) {
        throw ShapeError("rse of " + est.shape().to_string() + " against " +
                         truth.shape().to_string());
    }
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double d = est[i] - truth[i];
        err += d * d;
        ref += truth[i] * truth[i];
    }
    if (ref == 0.0) {
        throw ArgumentError("rse undefined for an all-zero reference");
    }
    return std::sqrt(err / ref);
}

double psnr(const DenseTensor& est, const DenseTensor& truth) {
    if (est.shape() != truth.shape()) {
        throw ShapeError("psnr of " + est.shape().to_string() + " against " +
                         truth.shape().to_string());
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double d = est[i] - truth[i];
        sq += d * d;
    }
    if (sq == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sq / static_cast<double>(est.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

DenseTensor fill_missing(const DenseTensor& observed, const DenseTensor& model,
                         const MissingMask& mask) {
    if (observed.shape() != model.shape() || observed.shape() != mask.shape()) {
        throw ShapeError("fill_missing operands differ in shape");
    }
    DenseTensor out = model;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask.observed(i)) out[i] = observed[i];
    }
    return out;
}

DenseTensor mean_fill(const DenseTensor& observed, const MissingMask& mask) {
    if (observed.shape() != mask.shape()) {
        throw ShapeError("mean_fill operands differ in shape");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (mask.observed(i)) sum += observed[i];
    }
    const double mean = sum / static_cast<double>(mask.observed_count());
    DenseTensor out = observed;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.observed(i)) out[i] = mean;
    }
    return out;
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class PpmHeaderReader {
public:
    PpmHeaderReader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

    std::size_t number(const char* what) {
        skip_space_and_comments();
        std::size_t v = 0;
        bool any = false;
        while (true) {
            const int c = in_.peek();
            if (c == EOF || c < '0' || c > '9') break;
            v = v * 10 + static_cast<std::size_t>(c - '0');
            any = true;
            in_.get();
            if (v > 1u << 20) fail(std::string(what) + " too large");
        }
        if (!any) fail(std::string("expected ") + what);
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(path_.string() + ": malformed PPM header: " + msg);
    }

private:
    void skip_space_and_comments() {
        while (true) {
            const int c = in_.peek();
            if (c == '#') {
                while (in_.peek() != '\n' && in_.peek() != EOF) in_.get();
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                in_.get();
            } else {
                return;
            }
        }
    }

    std::istream& in_;
    const std::filesystem::path& path_;
};

}  // namespace

DenseTensor load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");

    PpmHeaderReader header(in, path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6') header.fail("missing P6 magic");
    const std::size_t width = header.number("width");
    const std::size_t height = header.number("height");
    const std::size_t maxval = header.number("maxval");
    if (width == 0 || height == 0) header.fail("zero image dimension");
    if (maxval != 255) header.fail("maxval " + std::to_string(maxval) + " is not 255");
    const int sep = in.get();
    if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') {
        header.fail("missing whitespace after maxval");
    }

    const std::size_t bytes = width * height * 3;
    std::vector<unsigned char> payload(bytes);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
        throw FormatError(path.string() + ": truncated PPM payload, expected " +
                          std::to_string(bytes) + " bytes, read " + std::to_string(in.gcount()));
    }

    DenseTensor image(TensorShape{height, width, 3});
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            for (std::size_t c = 0; c < 3; ++c) {
                image[row + height * (col + width * c)] = payload[(row * width + col) * 3 + c];
            }
        }
    }
    return image;
}

void save_image(const std::filesystem::path& path, const DenseTensor& image) {
    check_image_shape(image.shape());
    const std::size_t height = image.shape().size(0);
    const std::size_t width = image.shape().size(1);
    std::vector<unsigned char> payload(width * height * 3);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            for (std::size_t c = 0; c < 3; ++c) {
                double v = image[row + height * (col + width * c)];
                v = std::isnan(v) ? 0.0 : std::round(std::clamp(v, 0.0, 255.0));
                payload[(row * width + col) * 3 + c] = static_cast<unsigned char>(v);
            }
        }
    }
    auto out = detail::open_for_write(path);
    out << "P6\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    detail::finish_write(out, path);
}

// ---------------------------------------------------------------------------
// Sparse and dense text formats

namespace {

constexpr const char* kSparseMagic = "stto-sparse v1";
constexpr const char* kDenseMagic = "stto-dense v1";

TensorShape read_shape_header(detail::LineReader& r, const char* magic) {
    const std::string first = r.next("format header");
    if (first != magic) r.fail("expected '" + std::string(magic) + "', found '" + first + "'");
    const std::size_t order = detail::parse_single_size(r, r.next("order"), "order");
    if (order == 0) r.fail("order must be positive");
    auto sizes = detail::parse_sizes(r, r.next("sizes"), order, "sizes");
    try {
        return TensorShape(std::move(sizes));
    } catch (const ShapeError& e) {
        r.fail(e.what());
    }
}

void write_shape_header(std::ostream& out, const char* magic, const TensorShape& shape) {
    out << magic << '\n' << shape.order() << '\n';
    for (std::size_t n = 0; n < shape.order(); ++n) out << (n ? " " : "") << shape.size(n);
    out << '\n';
}

}  // namespace

SparseObservations load_sparse(const std::filesystem::path& path) {
    detail::LineReader r(path);
    TensorShape shape = read_shape_header(r, kSparseMagic);
    const std::size_t order = shape.order();
    const std::size_t count = detail::parse_single_size(r, r.next("entry count"), "entry count");
    if (count == 0) r.fail("entry count must be positive");

    std::vector<Observation> entries;
    entries.reserve(count);
    std::set<std::size_t> seen;
    for (std::size_t m = 0; m < count; ++m) {
        const std::string line = r.next("observation");
        auto toks = detail::split_ws(line);
        if (toks.size() != order + 1) {
            r.fail("expected " + std::to_string(order) + " indices and a value, found " +
                   std::to_string(toks.size()) + " fields");
        }
        std::vector<std::size_t> coords(order);
        for (std::size_t n = 0; n < order; ++n) {
            if (!detail::parse_size(toks[n], coords[n])) {
                r.fail("invalid index '" + std::string(toks[n]) + "'");
            }
            if (coords[n] < 1 || coords[n] > shape.size(n)) {
                r.fail("index " + std::to_string(coords[n]) + " out of bounds in mode " +
                       std::to_string(n + 1));
            }
        }
        double value = 0.0;
        if (!detail::parse_double(toks[order], value)) {
            r.fail("invalid value '" + std::string(toks[order]) + "'");
        }
        MultiIndex idx(std::move(coords));
        if (!seen.insert(lin_index(shape, idx)).second) r.fail("duplicate index");
        entries.push_back({std::move(idx), value});
    }
    if (!r.at_end()) r.fail("more entries than the declared count " + std::to_string(count));
    return SparseObservations(std::move(shape), std::move(entries));
}

void save_sparse(const std::filesystem::path& path, const SparseObservations& obs) {
    auto out = detail::open_for_write(path);
    write_shape_header(out, kSparseMagic, obs.shape());
    out << obs.count() << '\n';
    for (std::size_t m = 0; m < obs.count(); ++m) {
        for (std::uint32_t c : obs.index0(m)) out << (c + 1) << ' ';
        out << detail::format_double(obs.value(m)) << '\n';
    }
    detail::finish_write(out, path);
}

DenseTensor load_dense(const std::filesystem::path& path) {
    detail::LineReader r(path);
    TensorShape shape = read_shape_header(r, kDenseMagic);
    std::vector<double> values(shape.element_count());
    for (double& v : values) {
        const std::string line = r.next("value");
        auto toks = detail::split_ws(line);
        if (toks.size() != 1 || !detail::parse_double(toks[0], v)) {
            r.fail("invalid value '" + line + "'");
        }
    }
    if (!r.at_end()) r.fail("more values than the shape holds");
    return DenseTensor(std::move(shape), std::move(values));
}

void save_dense(const std::filesystem::path& path, const DenseTensor& t) {
    auto out = detail::open_for_write(path);
    write_shape_header(out, kDenseMagic, t.shape());
    for (double v : t.values()) out << detail::format_double(v) << '\n';
    detail::finish_write(out, path);
}

}  // namespace stto
