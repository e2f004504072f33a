#include "kflow/morse.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace kflow;
using namespace kflow::morse;

namespace {

const double kE = std::exp(1.0);

Matrix rotation2(double a) {
    Matrix k(2, 2);
    k << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return k;
}

Matrix diag(std::initializer_list<double> entries) {
    const int n = static_cast<int>(entries.size());
    Matrix m = Matrix::Zero(n, n);
    int i = 0;
    for (double v : entries) m(i, i) = v, ++i;
    return m;
}

jordan::FlowSpec sl2_hyperbolic_flow() {
    return jordan::make_flow(jordan::TimeMode::continuous, diag({1, -1}));
}

jordan::FlowSpec sl2_discrete_flow() {
    return jordan::make_flow(jordan::TimeMode::discrete, diag({-kE, -1 / kE}));
}

jordan::FlowSpec example2_flow() {
    Matrix x = diag({2, -1, -1});
    x(1, 2) = 1;
    return jordan::make_flow(jordan::TimeMode::continuous, x);
}

}  // namespace

TEST_CASE("fixed component membership") {
    const Matrix H = diag({2, -1, -1});

    // Points of U land in their own coset.
    for (const auto& u : structure::enumerate_U(3)) {
        const auto label = fixed_component_of(CompactPoint(u.matrix()), H);
        REQUIRE(label.has_value());
        const auto rep = structure::coset_representative(u, structure::enumerate_UH(H));
        CHECK(label->representative == rep);
    }

    // A lower-block rotation sits in the identity coset.
    Matrix k = Matrix::Identity(3, 3);
    k.block(1, 1, 2, 2) = rotation2(0.9);
    const auto label = fixed_component_of(CompactPoint(k), H);
    REQUIRE(label.has_value());
    CHECK(label->representative == structure::SignedPermutation::identity(3));

    // Random rotations miss the fixed set.
    std::mt19937_64 rng(3);
    int hits = 0;
    for (int trial = 0; trial < 50; ++trial) {
        if (fixed_component_of(CompactPoint(linalg::random_special_orthogonal(3, rng)), H))
            ++hits;
    }
    CHECK(hits == 0);
}

TEST_CASE("fixed set fixtures") {
    // SL(2) regular: four isolated points.
    const auto labels2 = fixed_set(diag({1, -1}));
    CHECK(labels2.size() == 4);

    // SL(3) with a repeated level: six circle components.
    const auto labels3 = fixed_set(diag({2, -1, -1}));
    CHECK(labels3.size() == 6);

    CHECK_THROWS_AS(fixed_set(Matrix::Zero(3, 3)), ZeroElement);
}

TEST_CASE("morse components of the continuous SL(2) hyperbolic flow") {
    const auto flow = sl2_hyperbolic_flow();
    const auto labels = morse_components(flow);
    REQUIRE(labels.size() == 4);
    int attractors = 0, repellers = 0;
    for (const auto& l : labels) {
        CHECK(l.component_count == 1);
        CHECK(l.dimension == 0);
        attractors += l.is_attractor;
        repellers += l.is_repeller;
        // Attractors are exactly the two elements of C.
        const bool diagonal = l.coset.representative.is_diagonal();
        CHECK(l.is_attractor == diagonal);
    }
    CHECK(attractors == 2);
    CHECK(repellers == 2);
}

TEST_CASE("morse components of the discrete SL(2) flow with c_g = -1") {
    const auto flow = sl2_discrete_flow();
    CHECK(max_norm(flow.cg.matrix() + Matrix::Identity(2, 2)) == 0.0);
    const auto labels = morse_components(flow);
    REQUIRE(labels.size() == 2);
    for (const auto& l : labels) CHECK(l.component_count == 2);
    int attractors = 0, repellers = 0;
    for (const auto& l : labels) {
        attractors += l.is_attractor;
        repellers += l.is_repeller;
        if (l.is_attractor)
            CHECK(l.coset.representative == structure::SignedPermutation::identity(2));
    }
    CHECK(attractors == 1);
    CHECK(repellers == 1);
}

TEST_CASE("morse components of example 2") {
    const auto flow = example2_flow();
    const auto labels = morse_components(flow);
    REQUIRE(labels.size() == 6);
    int attractors = 0, repellers = 0;
    for (const auto& l : labels) {
        CHECK(l.component_count == 1);
        CHECK(l.dimension == 1);
        attractors += l.is_attractor;
        repellers += l.is_repeller;
    }
    CHECK(attractors == 2);
    CHECK(repellers == 2);
}

TEST_CASE("coset equality lemma, exhaustive for n = 2 and 3") {
    for (int n : {2, 3}) {
        const Matrix H = n == 2 ? diag({1, -1}) : diag({2, -1, -1});
        const auto group = structure::enumerate_U(n);
        const auto uh = structure::enumerate_UH(H);
        for (const auto& u : group) {
            const auto label_u = fixed_component_of(CompactPoint(u.matrix()), H);
            REQUIRE(label_u.has_value());
            for (const auto& v : group) {
                const auto label_v = fixed_component_of(CompactPoint(v.matrix()), H);
                REQUIRE(label_v.has_value());
                // Same component iff same right U_H-coset.
                const bool same_coset = structure::coset_representative(u, uh) ==
                                        structure::coset_representative(v, uh);
                CHECK((label_u->representative == label_v->representative) == same_coset);
            }
        }
    }
}

TEST_CASE("centralizer orbit stays inside the component") {
    const Matrix H = diag({2, -1, -1});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto gh = structure::subalgebra_basis(structure::SubalgebraKind::g_H, 3, &H);
    const auto uh = structure::enumerate_UH(H);
    for (const auto& u : structure::enumerate_U(3)) {
        for (int trial = 0; trial < 4; ++trial) {
            Matrix z = Matrix::Zero(3, 3);
            for (const auto& b : gh) z += 0.6 * unit(rng) * b;
            const Matrix l = linalg::expm(z);  // in G_H^0 by construction
            const CompactPoint moved =
                flow::act(l, CompactPoint(u.matrix()), {}, linalg::DetCheck::off);
            const auto label = fixed_component_of(moved, H);
            REQUIRE(label.has_value());
            CHECK(label->representative == structure::coset_representative(u, uh));
        }
    }
}

TEST_CASE("time-one map shifts components by c_g") {
    const auto flow = sl2_discrete_flow();
    const Matrix& H = flow.triple.H;
    const auto uh = structure::enumerate_UH(H);
    for (const auto& u : structure::enumerate_U(2)) {
        const CompactPoint x(u.matrix());
        const CompactPoint gx = flow::act(flow.adapted_generator, x, flow.tol);
        const auto label = fixed_component_of(gx, H);
        REQUIRE(label.has_value());
        const auto expected = structure::coset_representative(flow.cg.compose(u), uh);
        CHECK(label->representative == expected);
    }
}

TEST_CASE("basin classification on the SL(2) hyperbolic flow") {
    const auto flow = sl2_hyperbolic_flow();
    for (double alpha : {-1.2, -0.4, 0.3, 1.1}) {
        const auto basins = classify_basin(flow, CompactPoint(rotation2(alpha)));
        REQUIRE(basins.forward.has_value());
        REQUIRE(basins.backward.has_value());
        CHECK(basins.forward->coset.representative ==
              structure::SignedPermutation::identity(2));
        CHECK(basins.forward->is_attractor);
        CHECK(basins.backward->is_repeller);
    }
    // A fixed point classifies to itself both ways.
    const auto self = classify_basin(flow, CompactPoint::identity(2));
    REQUIRE(self.forward.has_value());
    REQUIRE(self.backward.has_value());
    CHECK(self.forward->coset.representative == self.backward->coset.representative);
}

TEST_CASE("stable manifold samples classify back to their label") {
    const auto flow = example2_flow();
    const auto labels = morse_components(flow);
    std::mt19937_64 rng(7);
    for (const auto& label : labels) {
        if (!label.is_attractor) continue;
        const auto samples = stable_manifold_sample(label, 5, flow, rng);
        for (const auto& p : samples) {
            const auto basins = classify_basin(flow, p, 1e-6, 4000.0);
            REQUIRE(basins.forward.has_value());
            CHECK(basins.forward->coset.representative == label.coset.representative);
        }
    }
}

TEST_CASE("stable manifold sample with zero noise lies on the component") {
    const auto flow = example2_flow();
    const auto labels = morse_components(flow);
    // Sampling is random; instead pin the degenerate case directly.
    const Matrix u = labels[0].coset.representative.matrix();
    const auto comp = fixed_component_of(CompactPoint(u), flow.triple.H);
    REQUIRE(comp.has_value());
    CHECK(comp->representative == labels[0].coset.representative);
}

TEST_CASE("recurrent points of the fixtures") {
    // Example 2: exactly 12, two per component, containing the two listed.
    const auto eflow = example2_flow();
    const auto rec = recurrent_points(eflow);
    CHECK(rec.size() == 12);
    int on_identity_circle = 0;
    bool has_identity = false, has_flip = false;
    const Matrix flip = diag({1, -1, -1});
    for (const auto& p : rec) {
        CHECK(flow::is_recurrent(eflow, p));
        if (max_norm(p.mat() - Matrix::Identity(3, 3)) < 1e-9) has_identity = true;
        if (max_norm(p.mat() - flip) < 1e-9) has_flip = true;
    }
    CHECK(has_identity);
    CHECK(has_flip);
    // Two per component.
    std::map<std::uint64_t, int> per_component;
    for (const auto& p : rec) {
        const auto label = fixed_component_of(p, eflow.triple.H);
        REQUIRE(label.has_value());
        ++per_component[label->representative.encode()];
    }
    CHECK(per_component.size() == 6);
    for (const auto& [rep, count] : per_component) CHECK(count == 2);

    // Pure hyperbolic: recurrent set = fixed set (representatives).
    const auto hflow = sl2_hyperbolic_flow();
    CHECK(recurrent_points(hflow).size() == 4);

    // SL(2) unipotent flow: recurrent candidates are C = {I, -I}.
    Matrix shear = Matrix::Zero(2, 2);
    shear(0, 1) = 1;
    const auto uflow = jordan::make_flow(jordan::TimeMode::continuous, shear);
    const auto urec = recurrent_points(uflow);
    CHECK(urec.size() == 2);
    for (const auto& p : urec) CHECK(max_norm(Matrix(p.mat().cwiseAbs()) - Matrix::Identity(2, 2)) < 1e-9);
}
