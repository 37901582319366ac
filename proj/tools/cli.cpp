#include "cli.hpp"

#include "CLI11.hpp"
#include "stto/completion.hpp"
#include "stto/data.hpp"
#include "stto/error.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace stto::cli {
namespace {

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::size_t to_size(const std::string& tok, const std::string& what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ArgumentError("invalid " + what + " '" + tok + "'");
    }
    return v;
}

double to_double(const std::string& tok, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ArgumentError("invalid " + what + " '" + tok + "'");
    }
    return v;
}

std::vector<std::size_t> size_list(const std::string& s, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& tok : split(s, ',')) out.push_back(to_size(tok, what));
    if (out.empty()) throw ArgumentError("empty " + what + " list");
    return out;
}

std::vector<double> double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& tok : split(s, ',')) out.push_back(to_double(tok, what));
    if (out.empty()) throw ArgumentError("empty " + what + " list");
    return out;
}

Method parse_method(const std::string& s) {
    if (s == "ncg") return Method::NcgHs;
    if (s == "gd") return Method::GradientDescent;
    throw ArgumentError("unknown method '" + s + "', expected gd or ncg");
}

TTRank resolve_ranks(const std::string& text, const TensorShape& shape) {
    TTRank requested(size_list(text, "rank"));
    if (requested.length() != shape.order() + 1) {
        throw ArgumentError("--ranks has " + std::to_string(requested.length()) +
                            " entries, shape " + shape.to_string() + " needs " +
                            std::to_string(shape.order() + 1));
    }
    return cap_ranks(shape, requested);
}

// "rows:10,20,30" or "block:top,left,height,width"
MissingMask parse_mask(const std::string& text, const TensorShape& shape) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ArgumentError("mask must look like rows:R1,R2,... or block:T,L,H,W");
    }
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "rows") {
        const auto rows = rest.empty() ? std::vector<std::size_t>{} : size_list(rest, "row");
        return mask_rows(shape, rows);
    }
    if (kind == "block") {
        const auto b = size_list(rest, "block coordinate");
        if (b.size() != 4) throw ArgumentError("block mask needs top,left,height,width");
        return mask_block(shape, b[0], b[1], b[2], b[3]);
    }
    throw ArgumentError("unknown mask kind '" + kind + "'");
}

struct OptimizerFlags {
    std::size_t max_iters = 200;
    std::string method = "ncg";
    double grad_tol = 0.0;
    double c1 = 1e-4;
    double c2 = 0.1;
    double initial_step = 1.0;
    std::size_t max_ls_evals = 25;

    void add_to(CLI::App& app) {
        app.add_option("--max-iters", max_iters, "Maximum optimizer iterations")->capture_default_str();
        app.add_option("--method", method, "gd or ncg")->capture_default_str();
        app.add_option("--grad-tol", grad_tol, "Stop when the gradient max-norm drops below this (0 disables)")
            ->capture_default_str();
        app.add_option("--wolfe-c1", c1, "Sufficient-decrease constant")->capture_default_str();
        app.add_option("--wolfe-c2", c2, "Curvature constant")->capture_default_str();
        app.add_option("--initial-step", initial_step, "First line-search trial step")->capture_default_str();
        app.add_option("--max-ls-evals", max_ls_evals, "Line-search evaluation budget")->capture_default_str();
    }

    [[nodiscard]] OptimizeConfig config() const {
        OptimizeConfig cfg;
        cfg.method = parse_method(method);
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        cfg.wolfe_c1 = c1;
        cfg.wolfe_c2 = c2;
        cfg.initial_step = initial_step;
        cfg.max_line_search_evals = max_ls_evals;
        cfg.validate();
        return cfg;
    }
};

void write_config(std::ostream& out, const OptimizeConfig& cfg) {
    out << "# method=" << to_string(cfg.method) << '\n'
        << "# max_iters=" << cfg.max_iters << '\n'
        << "# grad_tol=" << fmt(cfg.grad_tol) << '\n'
        << "# wolfe_c1=" << fmt(cfg.wolfe_c1) << '\n'
        << "# wolfe_c2=" << fmt(cfg.wolfe_c2) << '\n'
        << "# initial_step=" << fmt(cfg.initial_step) << '\n'
        << "# max_line_search_evals=" << cfg.max_line_search_evals << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

// ---------------------------------------------------------------------------
// complete

struct CompleteFlags {
    std::string sparse;
    std::string image;
    std::string dense;
    std::string truth;
    std::string ranks;
    std::string mask;
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    bool tensorize = false;
    double init_scale = 0.0;
    unsigned threads = 1;
    std::string out_prefix;
    OptimizerFlags opt;
    CLI::Option* rate_option = nullptr;
};

int cmd_complete(const CompleteFlags& f, std::ostream& out) {
    const int sources = !f.sparse.empty() + !f.image.empty() + !f.dense.empty();
    if (sources != 1) {
        throw ArgumentError("give exactly one of --sparse, --image, --dense");
    }
    const bool rate_given = f.rate_option->count() > 0;
    if (rate_given && !f.mask.empty()) {
        throw ArgumentError("--missing-rate and --mask are mutually exclusive");
    }
    if (!(f.init_scale >= 0.0)) throw ArgumentError("--init-scale must be non-negative");
    OptimizeConfig cfg = f.opt.config();

    SparseObservations obs;
    std::optional<DenseTensor> truth;  // in the solver's shape
    std::optional<TensorShape> image_shape;
    std::string source;

    if (!f.sparse.empty()) {
        if (f.tensorize || rate_given || !f.mask.empty()) {
            throw ArgumentError("--tensorize, --missing-rate and --mask need --image or --dense");
        }
        source = "sparse:" + f.sparse;
        obs = load_sparse(f.sparse);
        if (!f.truth.empty()) {
            truth = load_dense(f.truth);
            if (truth->shape() != obs.shape()) {
                throw ArgumentError("--truth shape " + truth->shape().to_string() +
                                    " differs from observations " + obs.shape().to_string());
            }
        }
    } else {
        if (!f.truth.empty()) throw ArgumentError("--truth only applies to --sparse input");
        DenseTensor data;
        if (!f.image.empty()) {
            source = "image:" + f.image;
            data = load_image(f.image);
            image_shape = data.shape();
        } else {
            source = "dense:" + f.dense;
            data = load_dense(f.dense);
        }
        MissingMask mask = f.mask.empty() ? mask_random(data.shape(), f.missing_rate, f.seed)
                                          : parse_mask(f.mask, data.shape());
        if (f.tensorize) {
            data = tensorize_image(data);
            mask = tensorize_mask(mask);
        }
        obs = extract_observations(data, mask);
        truth = std::move(data);
    }

    CompletionOptions opts;
    opts.rank = resolve_ranks(f.ranks, obs.shape());
    opts.optimizer = cfg;
    opts.seed = f.seed;
    if (f.init_scale > 0.0) opts.init_scale = f.init_scale;
    opts.eval.threads = std::max(1u, f.threads);

    CompletionResult res = complete(obs, opts);

    // Outputs
    const std::string prefix = f.out_prefix;
    save_model(prefix + ".model", res.cores);

    {
        auto csv = open_out(prefix + ".csv");
        csv << "# command=complete\n"
            << "# source=" << source << '\n'
            << "# shape=" << obs.shape().to_string() << '\n'
            << "# observed=" << obs.count() << '\n'
            << "# ranks=" << opts.rank.to_string() << '\n'
            << "# seed=" << f.seed << '\n'
            << "# tensorize=" << (f.tensorize ? "true" : "false") << '\n'
            << "# mask=" << (f.mask.empty() ? "random:" + fmt(f.missing_rate) : f.mask) << '\n'
            << "# init_scale=" << fmt(res.init_scale) << '\n'
            << "# threads=" << opts.eval.threads << '\n';
        write_config(csv, cfg);
        csv << "# termination=" << to_string(res.report.termination) << '\n';
        csv << "iter,objective,grad_norm,step\n";
        csv << 0 << ',' << fmt(res.report.initial_objective) << ','
            << fmt(res.report.initial_grad_norm) << ",0\n";
        for (std::size_t k = 0; k < res.report.trace.size(); ++k) {
            const auto& it = res.report.trace[k];
            csv << k + 1 << ',' << fmt(it.objective) << ',' << fmt(it.grad_norm) << ','
                << fmt(it.step) << '\n';
        }
        csv.flush();
        if (!csv) throw IoError("write to " + prefix + ".csv failed");
    }

    DenseTensor recovered = tt_full(res.cores);

    // Relative error over the observed entries.
    double err = 0.0, ref = 0.0;
    for (std::size_t m = 0; m < obs.count(); ++m) {
        const double d = recovered[lin_index(obs.shape(), obs.index(m))] - obs.value(m);
        err += d * d;
        ref += obs.value(m) * obs.value(m);
    }

    MetricsResult metrics;
    std::optional<double> full_rse;
    if (truth) full_rse = rse(recovered, *truth);

    if (image_shape) {
        DenseTensor img = f.tensorize ? detensorize_image(recovered) : recovered;
        const DenseTensor truth_img = f.tensorize ? detensorize_image(*truth) : *truth;
        metrics.psnr = psnr(img, truth_img);
        save_image(prefix + ".ppm", img);
    } else {
        save_dense(prefix + ".dense", recovered);
    }

    out << "metrics rse=" << (full_rse ? fmt(*full_rse) : "NA")
        << " psnr=" << (metrics.psnr ? fmt(*metrics.psnr) : "NA")
        << " rse_observed=" << (ref > 0.0 ? fmt(std::sqrt(err / ref)) : "NA")
        << " iters=" << res.report.iterations()
        << " final_objective=" << fmt(res.report.final_objective())
        << " termination=" << to_string(res.report.termination) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepFlags {
    std::vector<std::string> shapes;
    std::vector<std::string> ranks;
    std::size_t rank = 0;
    std::string rates;
    std::string seeds;
    std::string out_csv;
    double osc_domain = 16.0;
    unsigned workers = 1;
    OptimizerFlags opt;
};

struct GridPoint {
    TensorShape shape;
    TTRank rank;
    double rate = 0.0;
    std::uint64_t seed = 0;
};

struct GridResult {
    std::size_t iters = 0;
    double final_objective = 0.0;
    double rse = 0.0;
    double seconds = 0.0;
};

GridResult run_point(const GridPoint& p, const OptimizeConfig& cfg, double osc_domain) {
    const auto start = std::chrono::steady_clock::now();
    const double step = osc_domain > 0.0 ? oscillating_step(p.shape, osc_domain) : 1.0;
    DenseTensor truth = gen_oscillating(p.shape, step);
    SparseObservations obs = extract_observations(truth, mask_random(p.shape, p.rate, p.seed));
    CompletionOptions opts;
    opts.rank = p.rank;
    opts.optimizer = cfg;
    opts.seed = p.seed;
    CompletionResult res = complete(obs, opts);
    GridResult out;
    out.iters = res.report.iterations();
    out.final_objective = res.report.final_objective();
    out.rse = rse(tt_full(res.cores), truth);
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
    if (f.shapes.empty()) throw ArgumentError("at least one --shape is required");
    const bool per_shape = !f.ranks.empty();
    if (per_shape == (f.rank != 0)) throw ArgumentError("give either --rank or one --ranks per shape");
    if (per_shape && f.ranks.size() != f.shapes.size()) {
        throw ArgumentError("--ranks must be given once per --shape");
    }
    if (f.rates.empty()) throw ArgumentError("empty missing-rate list");
    if (f.seeds.empty()) throw ArgumentError("empty seed list");
    const auto rates = double_list(f.rates, "missing rate");
    const auto seeds = size_list(f.seeds, "seed");
    OptimizeConfig cfg = f.opt.config();

    std::vector<GridPoint> grid;
    for (std::size_t s = 0; s < f.shapes.size(); ++s) {
        TensorShape shape(size_list(f.shapes[s], "shape size"));
        TTRank rank = per_shape ? resolve_ranks(f.ranks[s], shape)
                                : cap_ranks(shape, TTRank::uniform(shape.order(), f.rank));
        for (double rate : rates) {
            if (!(rate >= 0.0 && rate < 1.0)) throw ArgumentError("missing rates must lie in [0, 1)");
            for (std::size_t seed : seeds) grid.push_back({shape, rank, rate, seed});
        }
    }

    std::vector<GridResult> results(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) {
            try {
                results[k] = run_point(grid[k], cfg, f.osc_domain);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned slots = std::max(1u, std::min<unsigned>(f.workers, static_cast<unsigned>(grid.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < slots; ++w) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    auto csv = open_out(f.out_csv);
    csv << "# command=sweep\n"
        << "# data=oscillating sin(t/4)cos(t^2)\n"
        << "# osc_domain=" << fmt(f.osc_domain) << '\n'
        << "# rates=" << f.rates << '\n'
        << "# seeds=" << f.seeds << '\n';
    write_config(csv, cfg);
    csv << "shape,rate,seed,rank,iters,final_objective,rse,seconds\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& p = grid[k];
        const auto& r = results[k];
        csv << p.shape.to_string() << ',' << fmt(p.rate) << ',' << p.seed << ','
            << p.rank.to_string() << ',' << r.iters << ',' << fmt(r.final_objective) << ','
            << fmt(r.rse) << ',' << fmt(r.seconds) << '\n';
    }
    csv.flush();
    if (!csv) throw IoError("write to " + f.out_csv + " failed");
    out << "sweep wrote " << grid.size() << " rows to " << f.out_csv << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// tensorize

struct TensorizeFlags {
    std::string in;
    std::string out;
    std::string direction = "forward";
};

int cmd_tensorize(const TensorizeFlags& f, std::ostream& out) {
    if (f.direction == "forward") {
        DenseTensor t = tensorize_image(load_image(f.in));
        save_dense(f.out, t);
        out << "tensorized " << f.in << " to " << t.shape().to_string() << '\n';
    } else if (f.direction == "inverse") {
        DenseTensor img = detensorize_image(load_dense(f.in));
        save_image(f.out, img);
        out << "restored " << img.shape().to_string() << " image to " << f.out << '\n';
    } else {
        throw ArgumentError("direction must be forward or inverse");
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tensor-train completion from sparse observations"};
    app.name(args.empty() ? "stto" : args.front());
    app.require_subcommand(1);

    CompleteFlags cf;
    CLI::App* complete = app.add_subcommand("complete", "Fit TT cores to observed entries and recover the full tensor");
    complete->add_option("--sparse", cf.sparse, "Observations in stto-sparse v1 format");
    complete->add_option("--image", cf.image, "PPM (P6) image to damage and recover");
    complete->add_option("--dense", cf.dense, "Tensor in stto-dense v1 format to damage and recover");
    complete->add_option("--truth", cf.truth, "Ground truth (stto-dense v1) for --sparse input");
    complete->add_option("--ranks", cf.ranks, "TT-rank chain, e.g. 1,16,16,1")->required();
    complete->add_option("--mask", cf.mask, "rows:R1,R2,... or block:TOP,LEFT,HEIGHT,WIDTH");
    cf.rate_option = complete->add_option("--missing-rate", cf.missing_rate, "Fraction of cells removed at random");
    complete->add_option("--seed", cf.seed, "Seed for the mask and the initial cores")->capture_default_str();
    complete->add_flag("--tensorize", cf.tensorize, "Tensorize the image before completion");
    complete->add_option("--init-scale", cf.init_scale, "Initial core entry std (0 = matched to data)")
        ->capture_default_str();
    complete->add_option("--threads", cf.threads, "Evaluation threads")->capture_default_str();
    complete->add_option("--out-prefix", cf.out_prefix, "Prefix for .csv/.model/.ppm/.dense outputs")->required();
    cf.opt.add_to(*complete);

    SweepFlags sf;
    CLI::App* sweep = app.add_subcommand("sweep", "Completion sweep over oscillating-function tensors");
    sweep->add_option("--shape", sf.shapes, "Tensor shape, e.g. 26,26,26 (repeatable)")->required();
    sweep->add_option("--ranks", sf.ranks, "Rank chain per shape (repeatable)");
    sweep->add_option("--rank", sf.rank, "Uniform inner rank, capped by each shape");
    sweep->add_option("--rates", sf.rates, "Missing rates, e.g. 0.1,0.5,0.9")->required();
    sweep->add_option("--seeds", sf.seeds, "Seeds, e.g. 1,2,3")->required();
    sweep->add_option("--out", sf.out_csv, "Output CSV")->required();
    sweep->add_option("--osc-domain", sf.osc_domain,
                      "Samples cover t in (0, D]; 0 uses the unit grid t = 1, 2, ...")
        ->capture_default_str();
    sweep->add_option("--workers", sf.workers, "Grid points run in parallel")->capture_default_str();
    sf.opt.add_to(*sweep);

    TensorizeFlags tf;
    CLI::App* tensorize = app.add_subcommand("tensorize", "Convert a 2^k x 2^k PPM to a (4,...,4,3) tensor or back");
    tensorize->add_option("--in", tf.in, "Input file")->required();
    tensorize->add_option("--out", tf.out, "Output file")->required();
    tensorize->add_option("--direction", tf.direction, "forward (PPM to tensor) or inverse")->capture_default_str();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    if (args.empty()) argv.push_back("stto");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInvalidArguments;
    }

    try {
        if (complete->parsed()) return cmd_complete(cf, out);
        if (sweep->parsed()) return cmd_sweep(sf, out);
        return cmd_tensorize(tf, out);
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidArguments;
    }
}

}  // namespace stto::cli
