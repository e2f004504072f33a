#include "kflow/structure.hpp"

#include "kflow/linalg.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace kflow;
using namespace kflow::structure;

namespace {

Matrix diag3(double a, double b, double c) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace

TEST_CASE("signed permutation round trip and group laws") {
    std::mt19937_64 rng(5);
    const auto group = enumerate_U(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto& a = group[rng() % group.size()];
        const auto& b = group[rng() % group.size()];
        // Matrix model agrees with the combinatorial composition.
        CHECK(max_norm(a.compose(b).matrix() - a.matrix() * b.matrix()) == 0.0);
        CHECK(max_norm(a.inverse().matrix() - a.matrix().transpose()) == 0.0);
        CHECK(a.determinant() == doctest::Approx(a.matrix().determinant()));
        const auto back = SignedPermutation::from_matrix(a.matrix());
        REQUIRE(back.has_value());
        CHECK(*back == a);
    }
}

TEST_CASE("chamber test and sorting") {
    CHECK(chamber_projectable(diag3(2, -1, -1)).in_chamber);
    const auto proj = chamber_projectable(diag3(-1, 2, -1));
    CHECK_FALSE(proj.in_chamber);
    CHECK(max_norm(proj.sorted - diag3(2, -1, -1)) == 0.0);
    CHECK(chamber_projectable(Matrix::Zero(3, 3)).in_chamber);
}

TEST_CASE("mu against explicit root enumeration") {
    // Oracle: enumerate all root values H_ii - H_jj directly.
    auto oracle = [](const Matrix& h) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index j = 0; j < h.rows(); ++j)
                if (i != j && h(i, i) - h(j, j) > 0)
                    best = std::min(best, h(i, i) - h(j, j));
        return best;
    };
    CHECK(mu(diag2(1, -1)) == doctest::Approx(2.0));
    CHECK(mu(diag2(1, -1)) == doctest::Approx(oracle(diag2(1, -1))));
    CHECK(mu(diag3(2, -1, -1)) == doctest::Approx(3.0));
    CHECK(mu(diag3(2, -1, -1)) == doctest::Approx(oracle(diag3(2, -1, -1))));
    CHECK(mu(diag3(2, 0, -2)) == doctest::Approx(2.0));
    CHECK(mu(diag3(2, 0, -2)) == doctest::Approx(oracle(diag3(2, 0, -2))));
    CHECK_THROWS_AS(mu(Matrix::Zero(3, 3)), ZeroElement);
}

TEST_CASE("subalgebra bases") {
    const Matrix h = diag3(2, -1, -1);

    const auto nm = subalgebra_basis(SubalgebraKind::n_minus_H, 3, &h);
    REQUIRE(nm.size() == 2);  // E21 and E31
    CHECK(nm[0](1, 0) + nm[1](1, 0) == doctest::Approx(1.0));
    CHECK(nm[0](2, 0) + nm[1](2, 0) == doctest::Approx(1.0));

    const auto kh = subalgebra_basis(SubalgebraKind::k_H, 3, &h);
    REQUIRE(kh.size() == 1);
    CHECK(kh[0](2, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(kh[0](1, 2) == doctest::Approx(-1.0 / std::sqrt(2.0)));

    // Regular element: centralizer is the diagonal subalgebra.
    const Matrix hr = diag3(2, 0, -2);
    const auto gh = subalgebra_basis(SubalgebraKind::g_H, 3, &hr);
    CHECK(gh.size() == 2);
    for (const auto& b : gh) {
        CHECK(std::abs(b.trace()) < 1e-14);
        CHECK(max_norm(Matrix(b - Matrix(b.diagonal().asDiagonal()))) == 0.0);
    }

    // Orthonormality under the Cartan inner product, every kind.
    for (auto kind : {SubalgebraKind::a, SubalgebraKind::n_plus, SubalgebraKind::n_minus,
                      SubalgebraKind::n_minus_H, SubalgebraKind::g_H, SubalgebraKind::k_H}) {
        const auto basis = subalgebra_basis(kind, 3, &h);
        for (size_t i = 0; i < basis.size(); ++i)
            for (size_t j = 0; j < basis.size(); ++j) {
                const double inner = RootDatum::cartan_inner(basis[i], basis[j]);
                CHECK(std::abs(inner - (i == j ? 1.0 : 0.0)) < 1e-14);
            }
    }
}

TEST_CASE("group sizes and the paper's small groups") {
    CHECK(enumerate_U(2).size() == 4);
    CHECK(enumerate_C(2).size() == 2);
    CHECK(enumerate_U(3).size() == 24);
    CHECK(enumerate_C(3).size() == 4);
    CHECK(enumerate_U(4).size() == 192);

    // n = 2: the four listed elements.
    std::set<std::uint64_t> got;
    for (const auto& u : enumerate_U(2)) got.insert(u.encode());
    auto expect = [&](std::initializer_list<double> entries) {
        Matrix m(2, 2);
        int i = 0;
        for (double v : entries) m(i / 2, i % 2) = v, ++i;
        const auto sp = SignedPermutation::from_matrix(m);
        REQUIRE(sp.has_value());
        CHECK(got.count(sp->encode()) == 1);
    };
    expect({1, 0, 0, 1});
    expect({-1, 0, 0, -1});
    expect({0, -1, 1, 0});
    expect({0, 1, -1, 0});

    // C consists of +-I for n = 2.
    const auto c2 = enumerate_C(2);
    CHECK(max_norm(c2[0].matrix() - Matrix::Identity(2, 2)) == 0.0);
    CHECK(max_norm(c2[1].matrix() + Matrix::Identity(2, 2)) == 0.0);
}

TEST_CASE("all enumerated elements are special orthogonal signed permutations") {
    for (int n : {2, 3, 4}) {
        for (const auto& u : enumerate_U(n)) {
            const Matrix m = u.matrix();
            CHECK(max_norm(m.transpose() * m - Matrix::Identity(n, n)) == 0.0);
            CHECK(u.determinant() == 1);
        }
        for (const auto& c : enumerate_C(n)) CHECK(c.is_diagonal());
    }
}

TEST_CASE("centralizer subgroups for the SL(3) fixture") {
    const Matrix h = diag3(2, -1, -1);
    const auto uh = enumerate_UH(h);
    REQUIRE(uh.size() == 4);
    // The four elements listed in the paper: 1, diag(1,-1,-1), and the two
    // block rotations by pi/2 in the lower block.
    std::set<std::uint64_t> got;
    for (const auto& u : uh) got.insert(u.encode());
    Matrix a = Matrix::Identity(3, 3);
    Matrix b = diag3(1, -1, -1);
    Matrix c = Matrix::Zero(3, 3);
    c(0, 0) = 1;
    c(2, 1) = -1;
    c(1, 2) = 1;
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 1;
    d(2, 1) = 1;
    d(1, 2) = -1;
    for (const Matrix& m : {a, b, c, d})
        CHECK(got.count(SignedPermutation::from_matrix(m)->encode()) == 1);

    CHECK(right_cosets(uh, enumerate_U(3), SubgroupTag::U_H).size() == 6);
    CHECK(enumerate_CH(h).size() == 2);

    // Degenerate cases.
    CHECK(enumerate_UH(Matrix::Zero(3, 3)).size() == 24);
    CHECK(right_cosets(enumerate_UH(Matrix::Zero(3, 3)), enumerate_U(3), SubgroupTag::U_H).size() ==
          1);
    const Matrix regular = diag2(1, -1);
    CHECK(enumerate_UH(regular).size() == 1);
    CHECK(right_cosets(enumerate_UH(regular), enumerate_U(2), SubgroupTag::U_H).size() == 4);
}

TEST_CASE("coset partitions and canonical representatives") {
    const Matrix h = diag3(2, -1, -1);
    const auto uh = enumerate_UH(h);
    const auto group = enumerate_U(3);
    const auto cosets = right_cosets(uh, group, SubgroupTag::U_H);

    // Partition: every element lands in exactly one coset, and the
    // representative is its coset minimum.
    size_t covered = 0;
    for (const auto& label : cosets) {
        for (const auto& s : uh) {
            const auto member = s.compose(label.representative);
            CHECK(coset_representative(member, uh) == label.representative);
            ++covered;
        }
    }
    CHECK(covered == group.size());
}

TEST_CASE("subgroup closure properties") {
    const Matrix h = diag3(2, -1, -1);
    for (const auto& group : {enumerate_UH(h), enumerate_CH(h)}) {
        for (const auto& a : group)
            for (const auto& b : group) {
                const auto ab = a.compose(b);
                CHECK(std::binary_search(group.begin(), group.end(), ab));
            }
    }
    // C intersect U_H = C_H.
    const auto uh = enumerate_UH(h);
    const auto ch = enumerate_CH(h);
    std::set<std::uint64_t> ch_set;
    for (const auto& c : ch) ch_set.insert(c.encode());
    for (const auto& c : enumerate_C(3)) {
        const bool in_uh = std::binary_search(uh.begin(), uh.end(), c);
        CHECK(in_uh == (ch_set.count(c.encode()) == 1));
    }
    // |U| = |C| |W|.
    CHECK(enumerate_U(3).size() == enumerate_C(3).size() * 6);
}

TEST_CASE("conjugation properties of U and C") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto group = enumerate_U(3);

    for (const auto& u : group) {
        // u A u^{-1} = A on a random positive diagonal.
        Matrix a = Matrix::Identity(3, 3);
        a(0, 0) = std::exp(unit(rng));
        a(1, 1) = std::exp(unit(rng));
        a(2, 2) = 1.0 / (a(0, 0) * a(1, 1));
        const Matrix conj = u.matrix() * a * u.matrix().transpose();
        CHECK(max_norm(Matrix(conj - Matrix(conj.diagonal().asDiagonal()))) < 1e-14);
        for (int i = 0; i < 3; ++i) CHECK(conj(i, i) > 0);
    }
    for (const auto& c : enumerate_C(3)) {
        // c H c^{-1} = H for diagonal H; c E_ij c^{-1} stays a positive
        // multiple of E_ij pattern inside N.
        const Matrix h = diag3(unit(rng), unit(rng), 0.0);
        CHECK(max_norm(c.matrix() * h * c.matrix().transpose() - h) == 0.0);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                Matrix e = Matrix::Zero(3, 3);
                e(i, j) = 1.0;
                const Matrix im = c.matrix() * e * c.matrix().transpose();
                CHECK(std::abs(std::abs(im(i, j)) - 1.0) < 1e-14);
            }
    }
}

TEST_CASE("weyl projection and principal involution") {
    const auto minus_id = SignedPermutation::minus_identity(2);
    const auto pi = weyl_project(minus_id);
    CHECK(pi == std::vector<int>{0, 1});

    const auto u2 = principal_involution(2);
    Matrix expected(2, 2);
    expected << 0, -1, 1, 0;
    CHECK(max_norm(u2.matrix() - expected) == 0.0);
    CHECK(u2.determinant() == 1);

    for (int n : {2, 3, 4, 5}) {
        const auto um = principal_involution(n);
        CHECK(um.determinant() == 1);
        const auto w = weyl_project(um);
        for (int j = 0; j < n; ++j) CHECK(w[j] == n - 1 - j);
        // Conjugation sends the positive nilpotent algebra to the negative
        // one: oracle by direct matrix conjugation.
        const Matrix m = um.matrix();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Matrix e = Matrix::Zero(n, n);
                e(i, j) = 1.0;
                const Matrix im = m * e * m.transpose();
                double lower_mass = 0, upper_mass = 0;
                for (int r = 0; r < n; ++r)
                    for (int s = 0; s < n; ++s) {
                        if (r > s) lower_mass += std::abs(im(r, s));
                        if (r < s) upper_mass += std::abs(im(r, s));
                    }
                CHECK(lower_mass == doctest::Approx(1.0));
                CHECK(upper_mass == 0.0);
            }
    }
}
