#pragma once

#include "kflow/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kflow::structure {

// Signed permutation matrix: column j carries sign[j] at row perm[j].
// With determinant +1 these realize the group U of connected components of
// the normalizer of A in SO(n); the diagonal ones (identity permutation)
// realize the subgroup C.
class SignedPermutation {
public:
    SignedPermutation() = default;
    SignedPermutation(std::vector<int> perm, std::vector<int> sign);

    static SignedPermutation identity(int n);
    static SignedPermutation minus_identity(int n);  // requires n even for det +1

    int size() const { return n_; }
    int perm(int j) const { return perm_[j]; }
    int sign(int j) const { return sign_[j]; }

    Matrix matrix() const;
    int determinant() const;  // sgn(perm) * prod(sign)

    SignedPermutation compose(const SignedPermutation& rhs) const;  // this * rhs
    SignedPermutation inverse() const;

    // Packed 4-bit-per-column key; also the total order used for canonical
    // coset representatives (positive sign sorts before negative).
    std::uint64_t encode() const;

    bool operator==(const SignedPermutation& o) const { return encode() == o.encode(); }
    bool operator<(const SignedPermutation& o) const { return encode() < o.encode(); }

    // Round a matrix to a signed permutation; nullopt if any entry is farther
    // than tol from {-1, 0, 1} or the pattern is not a signed permutation.
    static std::optional<SignedPermutation> from_matrix(const Matrix& m, double tol = 1e-6);

    bool is_diagonal() const;
    std::string to_string() const;  // e.g. "(2,-1,3)" for column images

private:
    int n_ = 0;
    std::array<std::int8_t, 8> perm_{};
    std::array<std::int8_t, 8> sign_{};
};

// Root functional a_ij(H) = H_ii - H_jj of sl(n,R).
struct Root {
    int i;
    int j;
    double value(const Matrix& h) const { return h(i, i) - h(j, j); }
};

// Root and chamber combinatorics for a fixed dimension.
struct RootDatum {
    explicit RootDatum(int n);

    int n;
    std::vector<Root> roots;           // all i != j
    std::vector<Root> positive_roots;  // i < j
    std::vector<Root> simple_roots;    // j = i + 1

    static Matrix cartan_involution(const Matrix& x) { return -x.transpose(); }
    static double cartan_inner(const Matrix& x, const Matrix& y) {
        return (x * y.transpose()).trace();
    }
};

struct ChamberProjection {
    bool in_chamber = false;       // diagonal nonincreasing
    Matrix sorted;                 // entries rearranged nonincreasing
    std::vector<int> permutation;  // sorted(i) = H(permutation[i])
};

// Test H in cl a+ (diagonal nonincreasing) and return the sorted version.
ChamberProjection chamber_projectable(const Matrix& h, double tol = 1e-12);

// Smallest strictly positive root value on H; ZeroElement when none exists.
double mu(const Matrix& h, double zero_tol = 1e-9);

// Indices of the diagonal grouped by level set (H assumed nonincreasing;
// values within tol are one level).
std::vector<std::vector<int>> level_sets(const Matrix& h, double tol = 1e-9);

// dim K_H^0 = sum over level sets of m(m-1)/2.
int centralizer_dimension(const Matrix& h, double tol = 1e-9);

enum class SubalgebraKind {
    a,        // diagonal traceless
    n_plus,   // strictly upper
    n_minus,  // strictly lower
    n_plus_H,  // root spaces with a(H) > 0
    n_minus_H, // root spaces with a(H) < 0
    g_H,      // block-diagonal traceless over the level sets of H
    k_H,      // skew-symmetric block-diagonal
};

// Orthonormal basis (Cartan inner product) of the requested subalgebra.
// Kinds with an H subscript require the chamber element.
std::vector<Matrix> subalgebra_basis(SubalgebraKind kind, int n,
                                     const Matrix* h = nullptr, double tol = 1e-9);

// The finite groups, in canonical sorted order.
std::vector<SignedPermutation> enumerate_U(int n);
std::vector<SignedPermutation> enumerate_C(int n);

// Centralizer subgroups: elements preserving each level set of H with
// per-block determinant +1.
std::vector<SignedPermutation> enumerate_UH(const Matrix& h, double tol = 1e-9);
std::vector<SignedPermutation> enumerate_CH(const Matrix& h, double tol = 1e-9);

enum class SubgroupTag { U_H, U_H_g, C_H, C_H_g };

std::string to_string(SubgroupTag tag);

// One right coset S u, named by its lexicographically least member.
struct CosetLabel {
    SignedPermutation representative;
    SubgroupTag tag = SubgroupTag::U_H;

    bool operator==(const CosetLabel& o) const { return representative == o.representative; }
    bool operator<(const CosetLabel& o) const { return representative < o.representative; }
};

// Partition `group` into right cosets of `subgroup`; labels sorted by
// representative.
std::vector<CosetLabel> right_cosets(const std::vector<SignedPermutation>& subgroup,
                                     const std::vector<SignedPermutation>& group,
                                     SubgroupTag tag);

// Coset representative of u in the partition by `subgroup` (min of S u).
SignedPermutation coset_representative(const SignedPermutation& u,
                                       const std::vector<SignedPermutation>& subgroup);

// Forget signs: the image in the Weyl group S_n.
std::vector<int> weyl_project(const SignedPermutation& u);

// A representative of the order-reversing Weyl element: alternating signs,
// last sign adjusted so the determinant is +1.
SignedPermutation principal_involution(int n);

}  // namespace kflow::structure
