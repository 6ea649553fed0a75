#include <doctest.h>

#include "xdjdl/dict_learning.hpp"
#include "xdjdl/inference.hpp"
#include "xdjdl/rng.hpp"
#include "xdjdl/synthetic.hpp"

#include <cmath>
#include <functional>

using namespace xdjdl;

namespace {

bool err_code(Err want, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == want;
    }
    return false;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

XdjdlModel model_from_planted(const synth::PlantedModel& m, Index t_e, Index t_p) {
    XdjdlModel model;
    model.D_e = m.D_e;
    model.D_p = m.D_p;
    model.W = m.W;
    model.hyper.k_e = m.D_e.cols();
    model.hyper.k_p = m.D_p.cols();
    model.hyper.t_e = t_e;
    model.hyper.t_p = t_p;
    return model;
}

} // namespace

TEST_CASE("identity model reproduces sparse inputs exactly") {
    XdjdlModel model;
    model.D_e = Matrix::Identity(4, 4);
    model.D_p = Matrix::Identity(4, 4);
    model.W = Matrix::Identity(4, 4);
    model.hyper.k_e = 4;
    model.hyper.k_p = 4;
    model.hyper.t_e = 2;
    model.hyper.t_p = 2;

    Matrix T = Matrix::Zero(4, 3);
    T(1, 0) = 2.0;
    T(0, 1) = -1.0;
    T(3, 1) = 0.5;
    // column 2 stays zero

    const infer::InferResult res = infer::infer_ecg(model, T);
    CHECK((res.recon - T).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((res.p_codes.coeffs - T).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(res.p_codes.coeffs.col(2).norm() == 0.0);
    CHECK(res.p_codes.sparsity_bound == 2);
}

TEST_CASE("codes come back in the dictionary's own scale") {
    XdjdlModel model;
    model.D_e = Matrix::Identity(3, 3);
    model.D_p = 2.0 * Matrix::Identity(3, 3); // deliberately non-unit columns
    model.W = Matrix::Identity(3, 3);
    model.hyper.k_e = 3;
    model.hyper.k_p = 3;
    model.hyper.t_e = 1;
    model.hyper.t_p = 1;

    Matrix T = Matrix::Zero(3, 1);
    T(1, 0) = 6.0;
    const infer::InferResult res = infer::infer_ecg(model, T);
    CHECK(res.p_codes.coeffs(1, 0) == doctest::Approx(3.0)); // 6 = 2 * 3
    CHECK(res.recon(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("planted cycles are reconstructed through the learned map") {
    const synth::PlantedModel m = synth::gen_planted_model(16, 12, 10, 2, 2, 50, 0, 44);
    const XdjdlModel model = model_from_planted(m, 2, 2);

    const infer::InferResult res = infer::infer_ecg(model, m.X_p);
    CHECK((res.recon - m.X_e).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((res.p_codes.coeffs - m.A_p).cwiseAbs().maxCoeff() < 1e-6);

    SUBCASE("column order does not matter") {
        Matrix T2(16, 2);
        T2.col(0) = m.X_p.col(7);
        T2.col(1) = m.X_p.col(3);
        const infer::InferResult swapped = infer::infer_ecg(model, T2);
        CHECK((swapped.recon.col(0) - res.recon.col(7)).norm() == 0.0);
        CHECK((swapped.recon.col(1) - res.recon.col(3)).norm() == 0.0);
    }

    SUBCASE("cycle length is checked") {
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { infer::infer_ecg(model, Matrix::Zero(15, 2)); }));
    }
}

TEST_CASE("label-consistent inference") {
    const synth::PlantedModel m = synth::gen_planted_model(12, 8, 8, 2, 2, 40, 2, 45);
    const Matrix Q = dl::build_q_matrix(m.labels, 2, 1);

    LcXdjdlModel lc;
    lc.base = model_from_planted(m, 2, 2);
    lc.base.hyper.gamma = 1e-12;
    lc.H = dl::ridge_init_w(Q, m.A_p, 1e-3);
    lc.class_count = 2;
    lc.ones_per_class = 1;

    SUBCASE("a vanishing label weight matches the plain path") {
        const infer::InferResult plain = infer::infer_ecg(lc.base, m.X_p);
        const infer::InferResult with_q = infer::infer_ecg_lc(lc, m.X_p, Q);
        CHECK((plain.recon - with_q.recon).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((with_q.recon - m.X_e).cwiseAbs().maxCoeff() < 1e-6);
    }

    SUBCASE("Q_test shape is validated") {
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { infer::infer_ecg_lc(lc, m.X_p, Q.leftCols(10)); }));
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { infer::infer_ecg_lc(lc, m.X_p, Matrix::Zero(3, 40)); }));
    }
}

TEST_CASE("peak alignment circularly shifts onto the reference argmax") {
    Vector ref = Vector::Zero(50);
    for (Index i = 0; i < 50; ++i)
        ref[i] = std::exp(-0.5 * std::pow((double(i) - 20.0) / 2.0, 2.0));

    SUBCASE("already aligned input is untouched") {
        const Vector out = infer::align_r_peak_offset(ref, ref);
        CHECK((out - ref).norm() == 0.0);
    }
    SUBCASE("a rotated copy is rotated back exactly") {
        Vector rec(50);
        for (Index i = 0; i < 50; ++i) rec[(i + 7) % 50] = ref[i];
        const Vector out = infer::align_r_peak_offset(ref, rec);
        CHECK((out - ref).norm() == 0.0);
    }
    SUBCASE("alignment can only improve the match to the reference") {
        Rng rng(3);
        Vector rec(50);
        for (Index i = 0; i < 50; ++i) rec[(i + 13) % 50] = ref[i] + 0.05 * rng.normal();
        const Vector out = infer::align_r_peak_offset(ref, rec);
        CHECK((out - ref).norm() < (rec - ref).norm());
    }
    SUBCASE("length mismatch") {
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { infer::align_r_peak_offset(ref, Vector::Zero(49)); }));
    }
}

TEST_CASE("orthonormal transform matrix") {
    const Matrix M = infer::dct_matrix(16);
    CHECK((M.transpose() * M - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
    for (Index j = 0; j < 16; ++j) CHECK(M(0, j) == doctest::Approx(0.25)); // sqrt(1/16)
    CHECK(err_code(Err::InvalidParams, [] { infer::dct_matrix(0); }));
}

TEST_CASE("spectral ridge baseline") {
    SUBCASE("identical pairs learn the identity map") {
        const Matrix X = random_matrix(6, 20, 51);
        const infer::DctBaseline base = infer::train_dct_baseline(X, X, 0.0);
        CHECK((base.W_dct - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
        const Matrix T = random_matrix(6, 4, 52);
        CHECK((infer::infer_dct_baseline(base, T) - T).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("matches the dense closed form") {
        const Matrix X_e = random_matrix(5, 15, 53), X_p = random_matrix(5, 15, 54);
        const double lambda = 0.2;
        const infer::DctBaseline base = infer::train_dct_baseline(X_e, X_p, lambda);

        const Matrix M = infer::dct_matrix(5);
        const Matrix C_e = M * X_e, C_p = M * X_p;
        const Matrix oracle =
            C_e * C_p.transpose() *
            (C_p * C_p.transpose() + lambda * Matrix::Identity(5, 5)).inverse();
        CHECK((base.W_dct - oracle).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("an exactly linear relation is recovered on held-out data") {
        const Matrix L = random_matrix(6, 6, 55);
        const Matrix X_p = random_matrix(6, 30, 56);
        const Matrix X_e = L * X_p;
        const infer::DctBaseline base = infer::train_dct_baseline(X_e, X_p, 0.0);
        const Matrix T = random_matrix(6, 5, 57);
        CHECK((infer::infer_dct_baseline(base, T) - L * T).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("zero input maps to zero output") {
        const infer::DctBaseline base =
            infer::train_dct_baseline(random_matrix(4, 9, 58), random_matrix(4, 9, 59), 0.1);
        CHECK(infer::infer_dct_baseline(base, Matrix::Zero(4, 2)).norm() == 0.0);
    }
    SUBCASE("a single pair still produces a finite model") {
        const infer::DctBaseline base =
            infer::train_dct_baseline(random_matrix(4, 1, 60), random_matrix(4, 1, 61), 0.1);
        CHECK(base.W_dct.allFinite());
    }
    SUBCASE("shapes are validated") {
        CHECK(err_code(Err::DimensionMismatch, [] {
            infer::train_dct_baseline(random_matrix(4, 5, 62), random_matrix(5, 5, 63), 0.1);
        }));
        CHECK(err_code(Err::TooFewSamples,
                       [] { infer::train_dct_baseline(Matrix(4, 0), Matrix(4, 0), 0.1); }));
        const infer::DctBaseline base =
            infer::train_dct_baseline(random_matrix(4, 9, 64), random_matrix(4, 9, 65), 0.1);
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { infer::infer_dct_baseline(base, Matrix::Zero(5, 2)); }));
    }
}
