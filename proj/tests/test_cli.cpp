#include "doctest.h"

#include "../tools/cli.hpp"
#include "stto/data.hpp"
#include "stto/tt.hpp"
#include "support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "stto");
    std::ostringstream out, err;
    const int code = stto::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(fs::temp_directory_path() / ("stto_cli_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& file) const { return (path_ / file).string(); }

private:
    fs::path path_;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> data_rows(const std::string& csv) {
    std::vector<std::string> rows;
    for (auto& line : lines_of(csv)) {
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    }
    return rows;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string field; std::getline(in, field, ',');) out.push_back(field);
    return out;
}

double metric(const std::string& out, const std::string& key) {
    const auto pos = out.find(key + "=");
    REQUIRE(pos != std::string::npos);
    return std::stod(out.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("argument errors exit with 2") {
    CHECK(run({}).code == stto::cli::kInvalidArguments);
    CHECK(run({"bogus"}).code == stto::cli::kInvalidArguments);
    CHECK(run({"--help"}).code == stto::cli::kOk);
    CHECK(run({"complete", "--ranks", "1,2,1"}).code == stto::cli::kInvalidArguments);

    TempDir dir("args");
    stto::save_dense(dir / "t.dense", stto::gen_tt_random(stto::TensorShape{3, 3}, {1, 2, 1}, 1));
    // Rank chain of the wrong length.
    Run r = run({"complete", "--dense", dir / "t.dense", "--ranks", "1,2,2,1", "--out-prefix",
                 dir / "o"});
    CHECK(r.code == stto::cli::kInvalidArguments);
    CHECK(r.err.find("rank") != std::string::npos);
    // Two inputs.
    CHECK(run({"complete", "--dense", dir / "t.dense", "--image", dir / "x.ppm", "--ranks", "1,2,1",
               "--out-prefix", dir / "o"})
              .code == stto::cli::kInvalidArguments);
    // A mask and a missing rate together.
    CHECK(run({"complete", "--dense", dir / "t.dense", "--ranks", "1,2,1", "--mask", "rows:1",
               "--missing-rate", "0.5", "--out-prefix", dir / "o"})
              .code == stto::cli::kInvalidArguments);
    CHECK(run({"complete", "--dense", dir / "t.dense", "--ranks", "1,2,1", "--missing-rate", "1.5",
               "--out-prefix", dir / "o"})
              .code == stto::cli::kInvalidArguments);
}

TEST_CASE("malformed sparse file exits with 3 and names the line") {
    TempDir dir("malformed");
    write_text(dir / "bad.sp", "stto-sparse v1\n3\n2 2 2\n2\n1 1 1 1.0\n2 x 2 3\n");
    Run r = run({"complete", "--sparse", dir / "bad.sp", "--ranks", "1,2,2,1", "--out-prefix",
                 dir / "o"});
    CHECK(r.code == stto::cli::kIoError);
    CHECK(r.err.find("bad.sp:6:") != std::string::npos);

    Run missing = run({"complete", "--sparse", dir / "none.sp", "--ranks", "1,2,2,1",
                       "--out-prefix", dir / "o"});
    CHECK(missing.code == stto::cli::kIoError);
}

TEST_CASE("non-finite objective exits with 4") {
    TempDir dir("numeric");
    write_text(dir / "big.sp", "stto-sparse v1\n3\n2 2 2\n2\n1 1 1 1e200\n2 2 2 -1e200\n");
    Run r = run({"complete", "--sparse", dir / "big.sp", "--ranks", "1,2,2,1", "--init-scale", "1",
                 "--out-prefix", dir / "o"});
    CHECK(r.code == stto::cli::kNumericFailure);
}

TEST_CASE("fully observed low-rank tensor is recovered") {
    TempDir dir("full");
    const stto::TensorShape shape{4, 5, 3};
    stto::save_dense(dir / "t.dense", stto::gen_tt_random(shape, {1, 2, 2, 1}, 9));
    Run r = run({"complete", "--dense", dir / "t.dense", "--ranks", "1,2,2,1", "--missing-rate",
                 "0", "--max-iters", "1000", "--grad-tol", "1e-12", "--out-prefix", dir / "fit"});
    REQUIRE(r.code == stto::cli::kOk);
    CHECK(r.out.rfind("metrics ", 0) == 0);
    CHECK(metric(r.out, "rse") < 1e-6);
    CHECK(fs::exists(dir / "fit.model"));
    CHECK(stto::load_model(dir / "fit.model").shape() == shape);
    CHECK(stto::load_dense(dir / "fit.dense").shape() == shape);
}

TEST_CASE("sparse input with truth reports RSE") {
    TempDir dir("sparse");
    const stto::TensorShape shape{4, 4, 4};
    stto::DenseTensor truth = stto::gen_tt_random(shape, {1, 2, 2, 1}, 5);
    stto::save_dense(dir / "truth.dense", truth);
    stto::save_sparse(dir / "obs.sp",
                      stto::extract_observations(truth, stto::mask_random(shape, 0.3, 6)));
    Run r = run({"complete", "--sparse", dir / "obs.sp", "--truth", dir / "truth.dense", "--ranks",
                 "1,2,2,1", "--max-iters", "500", "--out-prefix", dir / "o"});
    REQUIRE(r.code == stto::cli::kOk);
    CHECK(metric(r.out, "rse") < 1e-3);
    CHECK(r.out.find("psnr=NA") != std::string::npos);

    // Truth only makes sense with sparse input.
    CHECK(run({"complete", "--dense", dir / "truth.dense", "--truth", dir / "truth.dense",
               "--ranks", "1,2,2,1", "--out-prefix", dir / "o"})
              .code == stto::cli::kInvalidArguments);
}

TEST_CASE("trace CSV is deterministic and documents its configuration") {
    TempDir dir("trace");
    stto::save_dense(dir / "t.dense", stto::gen_oscillating(stto::TensorShape{5, 5, 5}, 0.1));
    std::vector<std::string> args{"complete", "--dense", dir / "t.dense", "--ranks", "1,3,3,1",
                                  "--missing-rate", "0.4", "--seed", "3", "--max-iters", "15"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out-prefix", dir / "a"});
    b.insert(b.end(), {"--out-prefix", dir / "b"});
    REQUIRE(run(a).code == stto::cli::kOk);
    REQUIRE(run(b).code == stto::cli::kOk);
    const std::string csv = read_bytes(dir / "a.csv");
    CHECK(csv == read_bytes(dir / "b.csv"));
    CHECK(read_bytes(dir / "a.model") == read_bytes(dir / "b.model"));

    CHECK(csv.find("# method=ncg") != std::string::npos);
    CHECK(csv.find("# max_iters=15") != std::string::npos);
    CHECK(csv.find("# seed=3") != std::string::npos);
    auto rows = data_rows(csv);
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == "iter,objective,grad_norm,step");
    CHECK(rows[1].rfind("0,", 0) == 0);
    CHECK(rows.size() <= 17);

    // A different seed changes the run.
    auto c = args;
    c[8] = "4";
    c.insert(c.end(), {"--out-prefix", dir / "c"});
    REQUIRE(run(c).code == stto::cli::kOk);
    CHECK(read_bytes(dir / "c.csv") != csv);
}

TEST_CASE("sweep") {
    TempDir dir("sweep");
    SUBCASE("empty rate list") {
        CHECK(run({"sweep", "--shape", "4,4,4", "--rank", "2", "--rates", "", "--seeds", "1",
                   "--out", dir / "s.csv"})
                  .code == stto::cli::kInvalidArguments);
    }
    SUBCASE("single grid point gives one row") {
        REQUIRE(run({"sweep", "--shape", "4,4,4", "--rank", "2", "--rates", "0.2", "--seeds", "1",
                     "--out", dir / "s.csv"})
                    .code == stto::cli::kOk);
        auto rows = data_rows(read_bytes(dir / "s.csv"));
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == "shape,rate,seed,rank,iters,final_objective,rse,seconds");
        auto fields = split_commas(rows[1]);
        REQUIRE(fields.size() == 8);
        CHECK(fields[0] == "4x4x4");
        CHECK(fields[3] == "1-2-2-1");
    }
    SUBCASE("fully observed grid point is fitted") {
        REQUIRE(run({"sweep", "--shape", "6,6,6", "--ranks", "1,6,6,1", "--rates", "0",
                     "--seeds", "1", "--max-iters", "2000", "--grad-tol", "1e-12", "--out",
                     dir / "s.csv"})
                    .code == stto::cli::kOk);
        auto rows = data_rows(read_bytes(dir / "s.csv"));
        REQUIRE(rows.size() == 2);
        CHECK(std::stod(split_commas(rows[1])[6]) < 1e-4);
    }
    SUBCASE("grid order and determinism apart from timing") {
        std::vector<std::string> args{"sweep",   "--shape", "4,4,4", "--shape", "3,3,3,3",
                                      "--rank",  "2",       "--rates", "0.1,0.6",
                                      "--seeds", "1,2",     "--max-iters", "20"};
        auto a = args, b = args;
        a.insert(a.end(), {"--out", dir / "a.csv"});
        b.insert(b.end(), {"--out", dir / "b.csv", "--workers", "3"});
        REQUIRE(run(a).code == stto::cli::kOk);
        REQUIRE(run(b).code == stto::cli::kOk);
        auto ra = data_rows(read_bytes(dir / "a.csv"));
        auto rb = data_rows(read_bytes(dir / "b.csv"));
        REQUIRE(ra.size() == 9);
        REQUIRE(rb.size() == 9);
        for (std::size_t k = 1; k < ra.size(); ++k) {
            auto fa = split_commas(ra[k]);
            auto fb = split_commas(rb[k]);
            fa.pop_back();
            fb.pop_back();
            CHECK(fa == fb);
        }
        CHECK(split_commas(ra[1])[0] == "4x4x4");
        CHECK(split_commas(ra[8])[0] == "3x3x3x3");
        CHECK(split_commas(ra[8])[3] == "1-2-2-2-1");
    }
}

TEST_CASE("tensorize round trip through files is bit-exact") {
    TempDir dir("tensorize");
    stto::DenseTensor img = stto::testing::synthetic_image(16);
    stto::save_image(dir / "in.ppm", img);
    REQUIRE(run({"tensorize", "--in", dir / "in.ppm", "--out", dir / "t.dense"}).code ==
            stto::cli::kOk);
    CHECK(stto::load_dense(dir / "t.dense").shape() == stto::TensorShape{4, 4, 4, 4, 3});
    REQUIRE(run({"tensorize", "--in", dir / "t.dense", "--out", dir / "back.ppm", "--direction",
                 "inverse"})
                .code == stto::cli::kOk);
    CHECK(read_bytes(dir / "back.ppm") == read_bytes(dir / "in.ppm"));

    stto::save_image(dir / "wide.ppm", stto::DenseTensor(stto::TensorShape{16, 8, 3}));
    CHECK(run({"tensorize", "--in", dir / "wide.ppm", "--out", dir / "w.dense"}).code ==
          stto::cli::kInvalidArguments);
    CHECK(run({"tensorize", "--in", dir / "in.ppm", "--out", dir / "x", "--direction", "sideways"})
              .code == stto::cli::kInvalidArguments);
}

TEST_CASE("image completion smoke run") {
    TempDir dir("image");
    stto::save_image(dir / "img.ppm", stto::testing::synthetic_image(16));
    Run r = run({"complete", "--image", dir / "img.ppm", "--missing-rate", "0.5", "--tensorize",
                 "--ranks", "1,16,16,16,16,1", "--max-iters", "50", "--out-prefix", dir / "rec"});
    REQUIRE(r.code == stto::cli::kOk);
    CHECK(std::isfinite(metric(r.out, "psnr")));
    CHECK(metric(r.out, "rse") < 1.0);
    CHECK(stto::load_image(dir / "rec.ppm").shape() == stto::TensorShape{16, 16, 3});
    CHECK(read_bytes(dir / "rec.csv").find("# ranks=1-4-16-12-3-1") != std::string::npos);

    Run rows = run({"complete", "--image", dir / "img.ppm", "--mask", "rows:2,5,9", "--ranks",
                    "1,4,3,1", "--max-iters", "10", "--out-prefix", dir / "rows"});
    CHECK(rows.code == stto::cli::kOk);
    Run block = run({"complete", "--image", dir / "img.ppm", "--mask", "block:20,1,2,2", "--ranks",
                     "1,4,3,1", "--out-prefix", dir / "blk"});
    CHECK(block.code == stto::cli::kInvalidArguments);
}
