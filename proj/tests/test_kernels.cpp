#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "ckor/error.hpp"
#include "ckor/kernels.hpp"
#include "support.hpp"

using namespace ckor;
using ckor::test::uniform_matrix;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (const double x : v) out[i++] = x;
    return out;
}

double min_over_max_eig(const Matrix& K)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    return es.eigenvalues().minCoeff() / es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("gaussian kernel at zero distance is one")
{
    const KernelSpec k = KernelSpec::gaussian(0.25);
    CHECK(k(vec({0.3, -1.1}), vec({0.3, -1.1})) == 1.0);
}

TEST_CASE("linear kernel against the zero vector is zero")
{
    CHECK(KernelSpec::linear()(vec({0, 0}), vec({5, -2})) == 0.0);
}

TEST_CASE("gaussian kernel matches the scalar formula")
{
    // exp(-|a-b|^2 / mu) with |a-b|^2 = 1 and mu = 0.25.
    const double oracle = std::exp(-1.0 / 0.25);
    const double got = KernelSpec::gaussian(0.25)(vec({0, 0}), vec({1, 0}));
    CHECK(got == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(got == doctest::Approx(0.01831563889).epsilon(1e-10));
}

TEST_CASE("identity augmentation adds the inner product")
{
    const Vector a = vec({0.2, -0.7});
    const Vector b = vec({1.1, 0.4});
    const double base = std::exp(-((a - b).squaredNorm()) / 2.0);
    CHECK(KernelSpec::linear_plus_identity(2.0)(a, b) == doctest::Approx(base + a.dot(b)).epsilon(1e-15));
}

TEST_CASE("kernel evaluation rejects mismatched dimensions")
{
    CHECK_THROWS_AS(KernelSpec::gaussian(1.0)(vec({1, 2}), vec({1})), InputError);
    CHECK_THROWS_AS(KernelSpec::linear()(vec({1, 2, 3}), vec({1})), InputError);
}

TEST_CASE("gaussian bandwidth must be positive")
{
    CHECK_THROWS_AS(KernelSpec::gaussian(0.0), InputError);
    CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), InputError);
    CHECK_THROWS_AS(KernelSpec::gaussian(std::nan("")), InputError);
}

TEST_CASE("family names round-trip")
{
    for (const KernelFamily f :
         {KernelFamily::Gaussian, KernelFamily::Linear, KernelFamily::LinearPlusIdentityAugmentation}) {
        CHECK(kernel_family_from_string(to_string(f)) == f);
    }
    CHECK_THROWS_AS(kernel_family_from_string("laplacian"), InputError);
}

TEST_CASE("gram of a single gaussian row is one")
{
    const Matrix A = Matrix::Constant(1, 3, 0.4);
    const Matrix G = gram(KernelSpec::gaussian(0.7), A);
    REQUIRE(G.rows() == 1);
    CHECK(G(0, 0) == 1.0);
}

TEST_CASE("linear gram matches hand inner products")
{
    Matrix A(2, 1);
    A << 1, 2;
    Matrix want(2, 2);
    want << 1, 2, 2, 4;
    CHECK(gram(KernelSpec::linear(), A, A) == want);
    CHECK(gram(KernelSpec::linear(), A) == want);
}

TEST_CASE("gram entries equal pointwise evaluation and self-grams are exactly symmetric")
{
    Rng rng(11);
    const Matrix A = uniform_matrix(rng, 7, 3);
    const Matrix B = uniform_matrix(rng, 5, 3);
    for (const KernelSpec& k :
         {KernelSpec::gaussian(0.3), KernelSpec::linear(), KernelSpec::linear_plus_identity(1.5)}) {
        const Matrix G = gram(k, A, B);
        for (Index i = 0; i < A.rows(); ++i) {
            for (Index j = 0; j < B.rows(); ++j) CHECK(G(i, j) == k(A.row(i).transpose(), B.row(j).transpose()));
        }
        const Matrix S = gram(k, A);
        CHECK(S == S.transpose());
        for (Index i = 0; i < A.rows(); ++i) {
            for (Index j = 0; j < A.rows(); ++j) {
                CHECK(k(A.row(i).transpose(), A.row(j).transpose()) == k(A.row(j).transpose(), A.row(i).transpose()));
            }
        }
    }
    CHECK_THROWS_AS(gram(KernelSpec::linear(), A, Matrix::Zero(2, 2)), InputError);
}

TEST_CASE("self-grams are positive semidefinite")
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix X = uniform_matrix(rng, 3 + trial, 2, -2.0, 2.0);
        const Matrix U = uniform_matrix(rng, 3 + trial, 1, -2.0, 2.0);
        CHECK(min_over_max_eig(gram(KernelSpec::gaussian(0.5), X)) >= -1e-10);
        CHECK(min_over_max_eig(gram(KernelSpec::linear(), X)) >= -1e-10);
        const CompositeControlKernel ck{KernelSpec::gaussian(0.5), KernelSpec::linear()};
        CHECK(min_over_max_eig(composite_gram(ck, X, U)) >= -1e-10);
    }
}

TEST_CASE("identity-augmented gram is the sum of the gaussian and linear grams")
{
    Rng rng(5);
    const Matrix A = uniform_matrix(rng, 6, 2);
    const Matrix sum = gram(KernelSpec::gaussian(0.8), A) + gram(KernelSpec::linear(), A);
    CHECK(test::max_abs(gram(KernelSpec::linear_plus_identity(0.8), A) - sum) <= 1e-15);
}

TEST_CASE("composite gram with zero inputs collapses to the state gram")
{
    Rng rng(7);
    const Matrix X = uniform_matrix(rng, 5, 2);
    const Matrix X2 = uniform_matrix(rng, 4, 2);
    const CompositeControlKernel ck{KernelSpec::gaussian(1.0), KernelSpec::linear()};
    const Matrix Kz = composite_gram(ck, X, Matrix::Zero(5, 1), X2, Matrix::Zero(4, 1));
    CHECK(Kz == gram(KernelSpec::gaussian(1.0), X, X2));
}

TEST_CASE("composite kernel of a scalar pair is kx times one plus ku")
{
    // k_X = 0.5 via a linear state kernel on x = x' = sqrt(0.5); k_U = 3 via u = 1, u' = 3.
    const CompositeControlKernel ck{KernelSpec::linear(), KernelSpec::linear()};
    const Matrix X = Matrix::Constant(1, 1, std::sqrt(0.5));
    const Matrix U = Matrix::Constant(1, 1, 1.0);
    const Matrix U2 = Matrix::Constant(1, 1, 3.0);
    CHECK(composite_gram(ck, X, U, X, U2)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("composite gram is the hadamard product entrywise")
{
    Rng rng(9);
    const Matrix X = uniform_matrix(rng, 6, 2);
    const Matrix U = uniform_matrix(rng, 6, 2);
    const Matrix X2 = uniform_matrix(rng, 3, 2);
    const Matrix U2 = uniform_matrix(rng, 3, 2);
    const CompositeControlKernel ck{KernelSpec::gaussian(0.4), KernelSpec::gaussian(2.0)};
    const Matrix K = composite_gram(ck, X, U, X2, U2);
    for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 3; ++j) {
            const double kx = std::exp(-(X.row(i) - X2.row(j)).squaredNorm() / 0.4);
            const double ku = std::exp(-(U.row(i) - U2.row(j)).squaredNorm() / 2.0);
            CHECK(K(i, j) == doctest::Approx(kx * (1.0 + ku)).epsilon(1e-14));
            CHECK(K(i, j) == ck(X.row(i).transpose(), U.row(i).transpose(), X2.row(j).transpose(),
                                U2.row(j).transpose()));
        }
    }
    const Matrix S = composite_gram(ck, X, U);
    CHECK(S == S.transpose());
    CHECK_THROWS_AS(composite_gram(ck, X, U.topRows(5), X2, U2), InputError);
}
