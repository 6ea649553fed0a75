#include <doctest.h>

#include "xdjdl/data_io.hpp"
#include "xdjdl/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace xdjdl;
namespace fs = std::filesystem;

namespace {

bool err_code(Err want, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == want;
    }
    return false;
}

std::string tmp_path(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "xdjdl_io_tests";
    fs::create_directories(dir);
    return (dir / leaf).string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    REQUIRE(f);
    f << bytes;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix znormed_columns(Index r, Index c, std::uint64_t seed) {
    Matrix m = random_matrix(r, c, seed);
    for (Index j = 0; j < c; ++j) {
        auto col = m.col(j);
        col.array() -= col.mean();
        col /= std::sqrt(col.squaredNorm() / double(r - 1));
    }
    return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

XdjdlModel make_model() {
    XdjdlModel m;
    m.D_e = random_matrix(6, 4, 1);
    m.D_p = random_matrix(6, 5, 2);
    m.W = random_matrix(4, 5, 3);
    m.D_e(0, 0) = 1.0 / 3.0;
    m.D_e(1, 0) = 5e-324; // denormal survives the container
    m.D_e(2, 0) = -0.0;
    m.hyper.k_e = 4;
    m.hyper.k_p = 5;
    m.hyper.t_e = 2;
    m.hyper.t_p = 3;
    m.hyper.alpha = 0.75;
    m.hyper.beta = 1.25;
    m.hyper.gamma = 2.0;
    m.hyper.ridge_lambda = 1e-4;
    m.hyper.max_iters = 7;
    m.hyper.rel_tol = 1e-5;
    m.hyper.seed = 42;
    m.trace = {5.0, 3.25, 2.5};
    return m;
}

} // namespace

TEST_CASE("model container round trips bit exact") {
    const std::string path = tmp_path("plain.xmodel");
    const XdjdlModel m = make_model();
    io::save_model(path, m);
    const io::SavedModel got = io::load_model(path);

    CHECK(got.variant == "xdjdl");
    CHECK(bitwise_equal(got.model.D_e, m.D_e));
    CHECK(bitwise_equal(got.model.D_p, m.D_p));
    CHECK(bitwise_equal(got.model.W, m.W));
    CHECK(got.model.trace == m.trace);
    CHECK(!got.H);
    CHECK(got.model.hyper.k_e == m.hyper.k_e);
    CHECK(got.model.hyper.k_p == m.hyper.k_p);
    CHECK(got.model.hyper.t_e == m.hyper.t_e);
    CHECK(got.model.hyper.t_p == m.hyper.t_p);
    CHECK(got.model.hyper.alpha == m.hyper.alpha);
    CHECK(got.model.hyper.beta == m.hyper.beta);
    CHECK(got.model.hyper.gamma == m.hyper.gamma);
    CHECK(got.model.hyper.ridge_lambda == m.hyper.ridge_lambda);
    CHECK(got.model.hyper.max_iters == m.hyper.max_iters);
    CHECK(got.model.hyper.rel_tol == m.hyper.rel_tol);
    CHECK(got.model.hyper.seed == m.hyper.seed);

    // a second save of the loaded model produces identical bytes
    const std::string path2 = tmp_path("plain2.xmodel");
    XdjdlModel again;
    again.D_e = got.model.D_e;
    again.D_p = got.model.D_p;
    again.W = got.model.W;
    again.hyper = got.model.hyper;
    again.trace = got.model.trace;
    io::save_model(path2, again);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("label-consistent model round trips with the classifier block") {
    const std::string path = tmp_path("lc.xmodel");
    LcXdjdlModel lc;
    lc.base = make_model();
    lc.H = random_matrix(6, 5, 4);
    lc.class_count = 3;
    lc.ones_per_class = 2;
    io::save_model(path, lc);

    const io::SavedModel got = io::load_model(path);
    CHECK(got.variant == "lc_xdjdl");
    REQUIRE(got.H);
    CHECK(bitwise_equal(*got.H, lc.H));
    CHECK(got.class_count == 3);
    CHECK(got.ones_per_class == 2);
    CHECK(bitwise_equal(got.model.W, lc.base.W));
}

TEST_CASE("generic container carries other variants") {
    const std::string path = tmp_path("dct.xmodel");
    io::SavedModel m;
    m.variant = "dct";
    m.model = make_model();
    io::save_model(path, m);

    const io::SavedModel got = io::load_model(path);
    CHECK(got.variant == "dct");
    CHECK(!got.H);
    CHECK(bitwise_equal(got.model.W, m.model.W));
}

TEST_CASE("model container rejects malformed files") {
    const std::string good = tmp_path("good.xmodel");
    io::save_model(good, make_model());
    const std::string bytes = slurp(good);

    SUBCASE("wrong magic") {
        std::string bad = bytes;
        bad[0] = 'Y';
        const std::string p = tmp_path("badmagic.xmodel");
        spit(p, bad);
        CHECK(err_code(Err::BadMagic, [&] { io::load_model(p); }));
    }
    SUBCASE("unsupported version") {
        std::string bad = bytes;
        bad[4] = 2;
        const std::string p = tmp_path("badver.xmodel");
        spit(p, bad);
        CHECK(err_code(Err::UnsupportedVersion, [&] { io::load_model(p); }));
    }
    SUBCASE("truncated payload") {
        const std::string p = tmp_path("trunc.xmodel");
        spit(p, bytes.substr(0, bytes.size() - 8));
        CHECK(err_code(Err::CorruptEntryTable, [&] { io::load_model(p); }));
    }
    SUBCASE("truncated header") {
        const std::string p = tmp_path("shorthdr.xmodel");
        spit(p, bytes.substr(0, 6));
        CHECK(err_code(Err::BadMagic, [&] { io::load_model(p); }));
    }
    SUBCASE("inconsistent variant metadata") {
        io::SavedModel m;
        m.variant = "lc_xdjdl"; // claims a classifier block but provides none
        m.model = make_model();
        const std::string p = tmp_path("noH.xmodel");
        io::save_model(p, m);
        CHECK(err_code(Err::ParseError, [&] { io::load_model(p); }));
    }
    SUBCASE("nonexistent file") {
        CHECK(err_code(Err::IoError, [] { io::load_model("/nonexistent/nowhere.xmodel"); }));
    }
}

TEST_CASE("signal csv round trips") {
    RawRecord rec;
    rec.ppg = {0.5, 1.0 / 3.0, 2.5, -0.125};
    rec.ecg = {1e-300, -2.0, 0.0, 12345.678};
    rec.fs = 125.0;

    SUBCASE("with a time column the rate is inferred") {
        const std::string p = tmp_path("sig_t.csv");
        io::write_signals(p, rec, true);
        const RawRecord got = io::read_signals(p);
        CHECK(got.ppg == rec.ppg);
        CHECK(got.ecg == rec.ecg);
        CHECK(got.fs == doctest::Approx(125.0).epsilon(1e-9));
    }
    SUBCASE("without a time column the caller supplies the rate") {
        const std::string p = tmp_path("sig_not.csv");
        io::write_signals(p, rec, false);
        const RawRecord got = io::read_signals(p, 200.0);
        CHECK(got.ppg == rec.ppg);
        CHECK(got.fs == 200.0);
        CHECK(err_code(Err::InvalidParams, [&] { io::read_signals(p); }));
    }
    SUBCASE("malformed inputs") {
        const std::string p = tmp_path("sig_bad.csv");
        spit(p, "volts,amps\n1,2\n");
        CHECK(err_code(Err::ParseError, [&] { io::read_signals(p, 125.0); }));
        spit(p, "ppg,ecg\n1,fish\n2,3\n");
        CHECK(err_code(Err::ParseError, [&] { io::read_signals(p, 125.0); }));
        spit(p, "ppg,ecg\n1,2,3\n");
        CHECK(err_code(Err::ParseError, [&] { io::read_signals(p, 125.0); }));
        spit(p, "ppg,ecg\n1,2\n");
        CHECK(err_code(Err::SequenceTooShort, [&] { io::read_signals(p, 125.0); }));
        RawRecord uneven = rec;
        uneven.ecg.pop_back();
        CHECK(err_code(Err::DimensionMismatch, [&] { io::write_signals(p, uneven, false); }));
    }
}

TEST_CASE("cycle sets round trip with their sidecar") {
    CyclePairSet cycles;
    cycles.ppg = znormed_columns(4, 3, 10);
    cycles.ecg = znormed_columns(4, 3, 11);
    cycles.fs = 125.0;
    cycles.mode = "o2o";
    cycles.labels = {0, 1, 0};
    cycles.src_len = {100, 110, 120};

    const std::string base = tmp_path("cyc");
    io::write_cycles(base, cycles);
    const CyclePairSet got = io::read_cycles(base);
    CHECK(bitwise_equal(got.ppg, cycles.ppg));
    CHECK(bitwise_equal(got.ecg, cycles.ecg));
    CHECK(got.fs == 125.0);
    CHECK(got.mode == "o2o");
    CHECK(got.labels == cycles.labels);
    CHECK(got.src_len == cycles.src_len);

    SUBCASE("sidecar shape disagreement is detected") {
        std::string meta = slurp(base + ".json");
        const auto at = meta.find("\"N\": 3");
        REQUIRE(at != std::string::npos);
        meta.replace(at, 6, "\"N\": 5");
        spit(base + ".json", meta);
        CHECK(err_code(Err::ShapeMismatch, [&] { io::read_cycles(base); }));
    }
    SUBCASE("missing sidecar") {
        CHECK(err_code(Err::IoError, [] { io::read_cycles("/nonexistent/cycles"); }));
    }
}

TEST_CASE("matrix csv round trips and rejects ragged input") {
    Matrix m(2, 3); // smallest value stays normal: stod rejects subnormal text
    m << 1.0 / 3.0, -0.0, 1e-300, 12345.678, 3e-308, -7.25;
    const std::string p = tmp_path("mat.csv");
    io::write_matrix_csv(p, m);
    CHECK(bitwise_equal(io::read_matrix_csv(p), m));

    spit(p, "1,2,3\n4,5\n");
    CHECK(err_code(Err::ParseError, [&] { io::read_matrix_csv(p); }));
    spit(p, "");
    CHECK(err_code(Err::ParseError, [&] { io::read_matrix_csv(p); }));
    CHECK(err_code(Err::IoError, [] { io::read_matrix_csv("/nonexistent/mat.csv"); }));
}

TEST_CASE("label files require a complete, unique assignment") {
    const std::string p = tmp_path("labels.csv");
    const std::vector<int> labels{2, 0, 1, 5};
    io::write_labels(p, labels);
    CHECK(io::read_labels(p, 4) == labels);

    // an index outside [0, n)
    CHECK(err_code(Err::ParseError, [&] { io::read_labels(p, 3); }));
    // an unlabeled cycle
    CHECK(err_code(Err::ParseError, [&] { io::read_labels(p, 5); }));

    spit(p, "cycle_index,class_id\n0,1\n0,2\n");
    CHECK(err_code(Err::ParseError, [&] { io::read_labels(p, 1); }));
    spit(p, "cycle_index,class_id\n0,-3\n");
    CHECK(err_code(Err::ParseError, [&] { io::read_labels(p, 1); }));
    spit(p, "index,class\n0,1\n");
    CHECK(err_code(Err::ParseError, [&] { io::read_labels(p, 1); }));
}
