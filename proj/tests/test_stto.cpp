#include "doctest.h"

#include "stto/completion.hpp"
#include "stto/error.hpp"
#include "stto/stto.hpp"
#include "support.hpp"

#include <algorithm>
#include <random>

using namespace stto;
using namespace stto::testing;

namespace {

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
    double worst = 0.0;
    for (std::size_t p = 0; p < analytic.size(); ++p) {
        const double denom = std::max(std::abs(analytic[p]), 1e-8);
        worst = std::max(worst, std::abs(analytic[p] - fd[p]) / denom);
    }
    return worst;
}

SparseObservations single(double y, MultiIndex idx) {
    return SparseObservations(TensorShape{2, 2}, {{std::move(idx), y}});
}

SparseObservations fit_observations(const TTCores& c) {
    std::vector<Observation> entries;
    for (std::size_t lin = 0; lin < c.shape().element_count(); lin += 2) {
        MultiIndex idx = multi_index(c.shape(), lin);
        entries.push_back({idx, tt_entry(c, idx)});
    }
    return SparseObservations(c.shape(), std::move(entries));
}

}  // namespace

TEST_CASE("observation set validation") {
    CHECK_THROWS_AS(SparseObservations(TensorShape{2, 2}, {}), ArgumentError);
    CHECK_THROWS_AS(SparseObservations(TensorShape{2, 2}, {{MultiIndex{1, 3}, 1.0}}), BoundsError);
    CHECK_THROWS_AS(SparseObservations(TensorShape{2, 2},
                                       {{MultiIndex{1, 2}, 1.0}, {MultiIndex{1, 2}, 2.0}}),
                    ArgumentError);

    SparseObservations obs(TensorShape{2, 2}, {{MultiIndex{2, 2}, 4.0}, {MultiIndex{1, 1}, 1.0}});
    CHECK(obs.count() == 2);
    CHECK(obs.index(0) == MultiIndex{1, 1});
    CHECK(obs.value(1) == 4.0);
}

TEST_CASE("objective examples") {
    TTCores c = example_cores();
    CHECK(objective(c, single(20.0, MultiIndex{1, 1})) == 4.5);

    SparseObservations exact = fit_observations(c);
    CHECK(objective(c, exact) == 0.0);

    SparseObservations obs(TensorShape{2, 2}, {{MultiIndex{1, 2}, 3.0}, {MultiIndex{2, 1}, -4.0}});
    CHECK(objective(TTCores::zeros(c.shape(), c.rank()), obs) == 0.5 * (9.0 + 16.0));

    SparseObservations wrong(TensorShape{2, 3}, {{MultiIndex{1, 1}, 1.0}});
    CHECK_THROWS_AS((void)objective(c, wrong), ShapeError);
    CHECK_THROWS_AS((void)gradient(c, wrong), ShapeError);
}

TEST_CASE("gradient examples") {
    TTCores c = example_cores();
    std::vector<double> g = gradient(c, single(20.0, MultiIndex{1, 1}));
    // core 1: slice 1 = [-15 -18] at offsets 0 and 2; core 2: slice 1 = [-3; -6] at 4, 5.
    CHECK(g == std::vector<double>{-15, 0, -18, 0, -3, -6, 0, 0});

    std::vector<double> fd = finite_difference_gradient(c, single(20.0, MultiIndex{1, 1}), 1e-5);
    CHECK(max_relative_error(g, fd) < 1e-6);

    std::vector<double> zero = gradient(c, fit_observations(c));
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("gradient matches central differences on random instances") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        auto inst = random_instance(seed, 3, 5, 5, 3, 30);
        std::vector<double> g = gradient(inst.cores, inst.obs);
        std::vector<double> fd = finite_difference_gradient(inst.cores, inst.obs, 1e-5);
        CHECK(max_relative_error(g, fd) < 1e-6);

        EvalOptions parallel{3};
        std::vector<double> gp = gradient(inst.cores, inst.obs, parallel);
        CHECK(max_relative_error(gp, fd) < 1e-6);
        CHECK(objective(inst.cores, inst.obs, parallel) ==
              doctest::Approx(objective(inst.cores, inst.obs)).epsilon(1e-13));
    }
}

TEST_CASE("slices with no observation receive exactly zero gradient") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = random_instance(seed, 3, 5, 5, 3, 6);
        const TTCores& c = inst.cores;
        std::vector<double> g = gradient(c, inst.obs);
        for (std::size_t n = 0; n < c.order(); ++n) {
            const std::size_t rl = c.rank()[n];
            const std::size_t in = c.shape().size(n);
            for (std::size_t j = 0; j < in; ++j) {
                bool covered = false;
                for (std::size_t m = 0; m < inst.obs.count(); ++m) {
                    covered = covered || inst.obs.index0(m)[n] == j;
                }
                if (covered) continue;
                for (std::size_t b = 0; b < c.rank()[n + 1]; ++b)
                    for (std::size_t a = 0; a < rl; ++a)
                        CHECK(g[c.core_offset(n) + a + rl * (j + in * b)] == 0.0);
            }
        }
    }
}

TEST_CASE("observation order does not change results") {
    std::mt19937_64 rng(4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = random_instance(seed, 3, 4, 5, 3, 30);
        std::vector<Observation> entries = inst.obs.entries();
        std::shuffle(entries.begin(), entries.end(), rng);
        SparseObservations shuffled(inst.obs.shape(), entries);
        CHECK(objective(inst.cores, shuffled) == objective(inst.cores, inst.obs));
        CHECK(gradient(inst.cores, shuffled) == gradient(inst.cores, inst.obs));
    }
}

TEST_CASE("split-point consistency of prefix and suffix products") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = random_instance(seed, 3, 5, 5, 3, 10);
        for (std::size_t m = 0; m < inst.obs.count(); ++m) {
            MultiIndex idx = inst.obs.index(m);
            SliceProducts sp = slice_products(inst.cores, idx);
            const std::size_t order = inst.cores.order();
            CHECK(sp.prefix[0] == std::vector<double>{1.0});
            CHECK(sp.suffix[order] == std::vector<double>{1.0});
            const double x = tt_entry(inst.cores, idx);
            for (std::size_t n = 1; n <= order; ++n) {
                const double v = split_product(inst.cores, sp, idx, n);
                CHECK(std::abs(v - x) <= 1e-12 * std::max(1.0, std::abs(x)));
            }
        }
    }
}

TEST_CASE("fused evaluation equals the separate calls") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = random_instance(seed, 3, 5, 5, 3, 30);
        ObjectiveGradient fused = objective_and_gradient(inst.cores, inst.obs);
        CHECK(fused.objective == objective(inst.cores, inst.obs));
        CHECK(fused.gradient == gradient(inst.cores, inst.obs));
    }
    TTCores c = example_cores();
    ObjectiveGradient zero = objective_and_gradient(c, fit_observations(c));
    CHECK(zero.objective == 0.0);
    CHECK(zero.gradient == std::vector<double>(c.param_count(), 0.0));
}

TEST_CASE("sparse objective equals the dense weighted objective") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = random_instance(seed + 50, 3, 3, 9, 3, 80);
        REQUIRE(inst.cores.shape().element_count() <= 1000);
        const double sparse = objective(inst.cores, inst.obs);
        const double dense = dense_weighted_objective(inst.cores, inst.obs);
        CHECK(std::abs(sparse - dense) <= 1e-10 * std::abs(dense));
    }
}

TEST_CASE("reconstruct") {
    TTCores c = example_cores();
    std::vector<MultiIndex> at{{1, 1}, {2, 2}};
    CHECK(reconstruct(c, at) == std::vector<double>{17, 53});

    SparseObservations fit = fit_observations(c);
    std::vector<MultiIndex> observed;
    for (std::size_t m = 0; m < fit.count(); ++m) observed.push_back(fit.index(m));
    std::vector<double> back = reconstruct(c, observed);
    CHECK(std::equal(back.begin(), back.end(), fit.values().begin()));

    auto inst = random_instance(9, 3, 4, 4, 3, 1);
    std::vector<MultiIndex> all;
    for (std::size_t lin = 0; lin < inst.cores.shape().element_count(); ++lin) {
        all.push_back(multi_index(inst.cores.shape(), lin));
    }
    DenseTensor full = tt_full(inst.cores);
    std::vector<double> vals = reconstruct(inst.cores, all);
    for (std::size_t lin = 0; lin < vals.size(); ++lin) {
        CHECK(vals[lin] == doctest::Approx(full[lin]).epsilon(1e-12));
    }

    std::vector<MultiIndex> bad{{3, 1}};
    CHECK_THROWS_AS((void)reconstruct(c, bad), BoundsError);
}

TEST_CASE("completion of a fully observed low-rank tensor") {
    TensorShape shape{5, 4, 6};
    TTRank rank{1, 2, 2, 1};
    DenseTensor truth = gen_tt_random(shape, rank, 3);
    std::vector<bool> all(shape.element_count(), true);
    SparseObservations obs = extract_observations(truth, MissingMask(shape, all));

    CompletionOptions opts;
    opts.rank = rank;
    opts.seed = 1;
    opts.optimizer.max_iters = 1000;
    opts.optimizer.grad_tol = 1e-10;
    CompletionResult res = complete(obs, opts);
    CHECK(rse(tt_full(res.cores), truth) < 1e-6);
    CHECK(res.init_scale == doctest::Approx(default_init_scale(obs, rank)));
}
