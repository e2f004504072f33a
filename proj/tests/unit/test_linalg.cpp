#include "kflow/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace kflow;
using linalg::iwasawa_project;

namespace {

Matrix rotation2(double a) {
    Matrix k(2, 2);
    k << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return k;
}

// Independent oracle: roots of the characteristic polynomial of a 2x2 matrix.
std::pair<std::complex<double>, std::complex<double>> charpoly_roots_2x2(const Matrix& m) {
    const double tr = m.trace();
    const double det = m.determinant();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

}  // namespace

TEST_CASE("iwasawa of the identity is trivial") {
    const Matrix id = Matrix::Identity(3, 3);
    const auto f = iwasawa_project(id);
    CHECK(max_norm(f.k - id) == 0.0);
    CHECK(max_norm(f.a - id) == 0.0);
    CHECK(max_norm(f.n - id) == 0.0);
}

TEST_CASE("iwasawa k-factor matches the closed form for h^t k(alpha)") {
    // First column of kappa(h^t k): (cos a / sqrt(cos^2 a + e^{-4t} sin^2 a),
    //                                sin a / sqrt(e^{4t} cos^2 a + sin^2 a)).
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
        Matrix h(2, 2);
        h << std::exp(t), 0, 0, std::exp(-t);
        for (int i = 0; i < 24; ++i) {
            const double a = i * M_PI / 12.0;
            const auto f = iwasawa_project(h * rotation2(a), {}, linalg::DetCheck::off);
            const double c = std::cos(a), s = std::sin(a);
            const double k00 = c / std::sqrt(c * c + std::exp(-4 * t) * s * s);
            const double k10 = s / std::sqrt(std::exp(4 * t) * c * c + s * s);
            CHECK(std::abs(f.k(0, 0) - k00) < 1e-12);
            CHECK(std::abs(f.k(1, 0) - k10) < 1e-12);
        }
    }
}

TEST_CASE("iwasawa reconstruction and factor shapes on random SL(4) input") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix g = linalg::random_unimodular(4, rng);
        const auto f = iwasawa_project(g);
        CHECK(max_norm(f.k * f.a * f.n - g) < 1e-12);
        CHECK(max_norm(f.k.transpose() * f.k - Matrix::Identity(4, 4)) < 1e-10);
        CHECK(f.k.determinant() > 0);
        for (int i = 0; i < 4; ++i) {
            CHECK(f.a(i, i) > 0);
            CHECK(f.n(i, i) == 1.0);
            for (int j = 0; j < i; ++j) {
                CHECK(f.n(i, j) == 0.0);
                CHECK(f.a(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("iwasawa uniqueness: factors of k a n round-trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const Matrix k = linalg::random_special_orthogonal(n, rng);
        Matrix a = Matrix::Identity(n, n);
        double logsum = 0;
        for (int i = 0; i + 1 < n; ++i) {
            const double l = unit(rng);
            a(i, i) = std::exp(l);
            logsum += l;
        }
        a(n - 1, n - 1) = std::exp(-logsum);
        Matrix up = Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) up(i, j) = unit(rng);

        const auto f = iwasawa_project(k * a * up);
        CHECK(max_norm(f.k - k) < 1e-8);
        CHECK(max_norm(f.a - a) < 1e-8);
        CHECK(max_norm(f.n - up) < 1e-8);
    }
}

TEST_CASE("iwasawa k-factor is right AN-invariant") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix g = linalg::random_unimodular(3, rng);
        Matrix a = Matrix::Identity(3, 3);
        a(0, 0) = std::exp(unit(rng));
        a(1, 1) = std::exp(unit(rng));
        a(2, 2) = 1.0 / (a(0, 0) * a(1, 1));
        Matrix up = Matrix::Identity(3, 3);
        up(0, 1) = unit(rng);
        up(0, 2) = unit(rng);
        up(1, 2) = unit(rng);
        const auto f1 = iwasawa_project(g);
        const auto f2 = iwasawa_project(g * a * up);
        CHECK(max_norm(f1.k - f2.k) < 1e-8);
    }
}

TEST_CASE("iwasawa rejects non-unimodular input") {
    CHECK_THROWS_AS(iwasawa_project(2.0 * Matrix::Identity(2, 2)), NonUnimodular);
}

TEST_CASE("iwasawa reports breakdown on numerically dependent columns") {
    Matrix g(2, 2);
    g << 1.0, 1.0, 1e-15, 1e-15;
    CHECK_THROWS_AS(iwasawa_project(g, {}, linalg::DetCheck::off), NumericalBreakdown);
}

TEST_CASE("expm basics") {
    CHECK(max_norm(linalg::expm(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)) == 0.0);

    Matrix nil(2, 2);
    nil << 0, 1.7, 0, 0;
    Matrix expected = Matrix::Identity(2, 2);
    expected(0, 1) = 1.7;
    CHECK(max_norm(linalg::expm(nil) - expected) < 1e-14);

    Matrix h(2, 2);
    h << 1, 0, 0, -1;
    const Matrix e = linalg::expm(h);
    CHECK(std::abs(e(0, 0) - std::exp(1.0)) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(-1.0)) < 1e-14);
    CHECK(std::abs(e(0, 1)) == 0.0);
}

TEST_CASE("eig on diagonal input groups multiplicities") {
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 2;
    d(1, 1) = -1;
    d(2, 2) = -1;
    const auto ed = linalg::eig(d);
    REQUIRE(ed.clusters.size() == 2);
    CHECK(ed.clusters[0].value.real() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ed.clusters[0].multiplicity == 1);
    CHECK(ed.clusters[1].value.real() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ed.clusters[1].multiplicity == 2);
    CHECK_FALSE(ed.clusters[1].defective);
}

TEST_CASE("eig flags the defective nilpotent block") {
    Matrix nil(2, 2);
    nil << 0, 1, 0, 0;
    const auto ed = linalg::eig(nil);
    REQUIRE(ed.clusters.size() == 1);
    CHECK(ed.clusters[0].multiplicity == 2);
    CHECK(std::abs(ed.clusters[0].value) < 1e-10);
    CHECK(ed.clusters[0].defective);
    CHECK(ed.clusters[0].geometric == 1);
}

TEST_CASE("eig matches the characteristic polynomial oracle on a rotation") {
    const Matrix r = rotation2(M_PI / 2.0);
    const auto [r1, r2] = charpoly_roots_2x2(r);
    const auto ed = linalg::eig(r);
    REQUIRE(ed.clusters.size() == 2);
    // Clusters come sorted by descending imaginary part here (+i first).
    CHECK(std::abs(ed.clusters[0].value - r1) < 1e-12);
    CHECK(std::abs(ed.clusters[1].value - r2) < 1e-12);
}

TEST_CASE("eig eigenpair residual contract") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const Matrix g = linalg::random_unimodular(4, rng);
        const auto ed = linalg::eig(g);
        const Eigen::MatrixXcd gc = g.cast<std::complex<double>>();
        int total = 0;
        for (const auto& cl : ed.clusters) {
            total += cl.multiplicity;
            CHECK((gc * cl.eigenvector - cl.vector_value * cl.eigenvector).norm() < 1e-8);
        }
        CHECK(total == 4);
        // The block-diagonalizing transform reproduces the matrix.
        const Eigen::MatrixXcd recon =
            ed.transform * ed.block_triangular * ed.transform_inverse;
        CHECK((recon - gc).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("eig separation failure raises IllConditioned") {
    // Eigenvalues chained 0, 9e-8, 1.8e-7, ... spread wider than the
    // separation margin without any gap to split at.
    Matrix d = Matrix::Zero(8, 8);
    for (int i = 0; i < 8; ++i) d(i, i) = 9e-8 * i;
    CHECK_THROWS_AS(linalg::eig(d, 1e-7), IllConditioned);
}
