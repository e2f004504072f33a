#include "kflow/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace kflow::structure {

SignedPermutation::SignedPermutation(std::vector<int> perm, std::vector<int> sign) {
    if (perm.size() != sign.size() || perm.empty() || perm.size() > 8)
        throw std::invalid_argument("SignedPermutation: size mismatch or out of range");
    n_ = static_cast<int>(perm.size());
    std::vector<bool> seen(n_, false);
    for (int j = 0; j < n_; ++j) {
        if (perm[j] < 0 || perm[j] >= n_ || seen[perm[j]])
            throw std::invalid_argument("SignedPermutation: not a permutation");
        seen[perm[j]] = true;
        if (sign[j] != 1 && sign[j] != -1)
            throw std::invalid_argument("SignedPermutation: signs must be +-1");
        perm_[j] = static_cast<std::int8_t>(perm[j]);
        sign_[j] = static_cast<std::int8_t>(sign[j]);
    }
}

SignedPermutation SignedPermutation::identity(int n) {
    std::vector<int> p(n), s(n, 1);
    std::iota(p.begin(), p.end(), 0);
    return SignedPermutation(p, s);
}

SignedPermutation SignedPermutation::minus_identity(int n) {
    std::vector<int> p(n), s(n, -1);
    std::iota(p.begin(), p.end(), 0);
    return SignedPermutation(p, s);
}

Matrix SignedPermutation::matrix() const {
    Matrix m = Matrix::Zero(n_, n_);
    for (int j = 0; j < n_; ++j) m(perm_[j], j) = sign_[j];
    return m;
}

int SignedPermutation::determinant() const {
    // Parity by cycle count.
    std::array<bool, 8> seen{};
    int transpositions = 0;
    for (int j = 0; j < n_; ++j) {
        if (seen[j]) continue;
        int len = 0;
        for (int k = j; !seen[k]; k = perm_[k]) {
            seen[k] = true;
            ++len;
        }
        transpositions += len - 1;
    }
    int det = (transpositions % 2 == 0) ? 1 : -1;
    for (int j = 0; j < n_; ++j) det *= sign_[j];
    return det;
}

SignedPermutation SignedPermutation::compose(const SignedPermutation& rhs) const {
    if (n_ != rhs.n_) throw std::invalid_argument("SignedPermutation: size mismatch");
    std::vector<int> p(n_), s(n_);
    for (int j = 0; j < n_; ++j) {
        p[j] = perm_[rhs.perm_[j]];
        s[j] = rhs.sign_[j] * sign_[rhs.perm_[j]];
    }
    return SignedPermutation(p, s);
}

SignedPermutation SignedPermutation::inverse() const {
    std::vector<int> p(n_), s(n_);
    for (int j = 0; j < n_; ++j) {
        p[perm_[j]] = j;
        s[perm_[j]] = sign_[j];
    }
    return SignedPermutation(p, s);
}

std::uint64_t SignedPermutation::encode() const {
    std::uint64_t key = 0;
    for (int j = 0; j < n_; ++j) {
        const std::uint64_t nibble =
            (static_cast<std::uint64_t>(perm_[j]) << 1) | (sign_[j] < 0 ? 1u : 0u);
        key = (key << 4) | nibble;
    }
    return key;
}

std::optional<SignedPermutation> SignedPermutation::from_matrix(const Matrix& m, double tol) {
    const auto n = m.rows();
    if (n != m.cols() || n < 1 || n > 8) return std::nullopt;
    std::vector<int> perm(n, -1), sign(n, 0);
    std::vector<bool> used(n, false);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = m(i, j);
            if (std::abs(v) <= tol) continue;
            if (std::abs(std::abs(v) - 1.0) > tol) return std::nullopt;
            if (perm[j] >= 0 || used[i]) return std::nullopt;
            perm[j] = static_cast<int>(i);
            sign[j] = v > 0 ? 1 : -1;
            used[i] = true;
        }
        if (perm[j] < 0) return std::nullopt;
    }
    return SignedPermutation(perm, sign);
}

bool SignedPermutation::is_diagonal() const {
    for (int j = 0; j < n_; ++j)
        if (perm_[j] != j) return false;
    return true;
}

std::string SignedPermutation::to_string() const {
    std::string s = "(";
    for (int j = 0; j < n_; ++j) {
        if (j) s += ",";
        s += std::to_string(static_cast<int>(sign_[j]) * (perm_[j] + 1));
    }
    return s + ")";
}

RootDatum::RootDatum(int n_) : n(n_) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) roots.push_back({i, j});
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) positive_roots.push_back({i, j});
    for (int i = 0; i + 1 < n; ++i) simple_roots.push_back({i, i + 1});
}

namespace {

void require_diagonal(const Matrix& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("expected square diagonal matrix");
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (i != j && h(i, j) != 0.0)
                throw std::invalid_argument("expected diagonal matrix");
}

}  // namespace

ChamberProjection chamber_projectable(const Matrix& h, double tol) {
    require_diagonal(h);
    const auto n = h.rows();
    ChamberProjection out;
    out.permutation.resize(n);
    std::iota(out.permutation.begin(), out.permutation.end(), 0);
    std::stable_sort(out.permutation.begin(), out.permutation.end(),
                     [&](int a, int b) { return h(a, a) > h(b, b); });
    out.sorted = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out.sorted(i, i) = h(out.permutation[i], out.permutation[i]);
    out.in_chamber = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (h(i, i) < h(i + 1, i + 1) - tol) out.in_chamber = false;
    return out;
}

double mu(const Matrix& h, double zero_tol) {
    require_diagonal(h);
    const auto n = h.rows();
    double best = 0.0;
    bool found = false;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = h(i, i) - h(j, j);
            if (v > zero_tol && (!found || v < best)) {
                best = v;
                found = true;
            }
        }
    if (!found) throw ZeroElement("mu: no strictly positive root value (H = 0?)");
    return best;
}

std::vector<std::vector<int>> level_sets(const Matrix& h, double tol) {
    require_diagonal(h);
    const auto n = h.rows();
    std::vector<std::vector<int>> blocks;
    for (int i = 0; i < n;) {
        std::vector<int> block{i};
        int j = i + 1;
        while (j < n && std::abs(h(j, j) - h(i, i)) <= tol) block.push_back(j++);
        blocks.push_back(std::move(block));
        i = j;
    }
    return blocks;
}

int centralizer_dimension(const Matrix& h, double tol) {
    int dim = 0;
    for (const auto& block : level_sets(h, tol)) {
        const int m = static_cast<int>(block.size());
        dim += m * (m - 1) / 2;
    }
    return dim;
}

namespace {

Matrix unit(int n, int i, int j) {
    Matrix e = Matrix::Zero(n, n);
    e(i, j) = 1.0;
    return e;
}

std::vector<Matrix> diagonal_basis(int n) {
    // d_k = diag(1,...,1,-k,0,...)/sqrt(k(k+1)), orthonormal under tr(X Y^T).
    std::vector<Matrix> basis;
    for (int k = 1; k < n; ++k) {
        Matrix d = Matrix::Zero(n, n);
        for (int i = 0; i < k; ++i) d(i, i) = 1.0;
        d(k, k) = -k;
        basis.push_back(d / std::sqrt(static_cast<double>(k) * (k + 1)));
    }
    return basis;
}

std::vector<int> level_of(const Matrix& h, double tol) {
    std::vector<int> lv(h.rows());
    int id = 0;
    for (const auto& block : level_sets(h, tol)) {
        for (int i : block) lv[i] = id;
        ++id;
    }
    return lv;
}

}  // namespace

std::vector<Matrix> subalgebra_basis(SubalgebraKind kind, int n, const Matrix* h, double tol) {
    const bool needs_h = kind == SubalgebraKind::n_plus_H || kind == SubalgebraKind::n_minus_H ||
                         kind == SubalgebraKind::g_H || kind == SubalgebraKind::k_H;
    if (needs_h && h == nullptr)
        throw std::invalid_argument("subalgebra_basis: kind requires a chamber element");

    std::vector<Matrix> basis;
    switch (kind) {
        case SubalgebraKind::a:
            return diagonal_basis(n);
        case SubalgebraKind::n_plus:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) basis.push_back(unit(n, i, j));
            return basis;
        case SubalgebraKind::n_minus:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) basis.push_back(unit(n, j, i));
            return basis;
        case SubalgebraKind::n_plus_H:
        case SubalgebraKind::n_minus_H: {
            const double s = kind == SubalgebraKind::n_plus_H ? 1.0 : -1.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (s * ((*h)(i, i) - (*h)(j, j)) > tol) basis.push_back(unit(n, i, j));
                }
            return basis;
        }
        case SubalgebraKind::g_H: {
            const auto lv = level_of(*h, tol);
            basis = diagonal_basis(n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j && lv[i] == lv[j]) basis.push_back(unit(n, i, j));
            return basis;
        }
        case SubalgebraKind::k_H: {
            const auto lv = level_of(*h, tol);
            const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (lv[i] == lv[j])
                        basis.push_back(inv_sqrt2 * (unit(n, j, i) - unit(n, i, j)));
            return basis;
        }
    }
    throw std::logic_error("subalgebra_basis: unknown kind");
}

namespace {

// All sign vectors over `slots` whose product is `target` (+-1).
void sign_patterns(int slots, int target, std::vector<std::vector<int>>& out) {
    out.clear();
    const int count = 1 << std::max(0, slots - 1);
    for (int mask = 0; mask < count; ++mask) {
        std::vector<int> s(slots, 1);
        int prod = 1;
        for (int b = 0; b + 1 < slots; ++b)
            if (mask & (1 << b)) {
                s[b] = -1;
                prod = -prod;
            }
        if (slots > 0) s[slots - 1] = prod * target;
        out.push_back(std::move(s));
    }
}

int permutation_parity(const std::vector<int>& p) {
    std::vector<bool> seen(p.size(), false);
    int transpositions = 0;
    for (size_t j = 0; j < p.size(); ++j) {
        if (seen[j]) continue;
        int len = 0;
        for (size_t k = j; !seen[k]; k = p[k]) {
            seen[k] = true;
            ++len;
        }
        transpositions += len - 1;
    }
    return transpositions % 2 == 0 ? 1 : -1;
}

}  // namespace

std::vector<SignedPermutation> enumerate_U(int n) {
    if (n < 2 || n > 8) throw std::invalid_argument("enumerate_U: 2 <= n <= 8");
    size_t factorial = 1;
    for (int i = 2; i <= n; ++i) factorial *= i;
    std::vector<SignedPermutation> out;
    out.reserve((1ull << (n - 1)) * factorial);
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> signs;
    do {
        const int parity = permutation_parity(p);
        sign_patterns(n, parity, signs);  // sgn * prod(signs) = +1
        for (auto& s : signs) out.emplace_back(p, s);
    } while (std::next_permutation(p.begin(), p.end()));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SignedPermutation> enumerate_C(int n) {
    if (n < 2 || n > 8) throw std::invalid_argument("enumerate_C: 2 <= n <= 8");
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> signs;
    sign_patterns(n, 1, signs);
    std::vector<SignedPermutation> out;
    out.reserve(signs.size());
    for (auto& s : signs) out.emplace_back(p, s);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Direct product over level-set blocks of the signed permutations of each
// block with per-block determinant +1.
std::vector<SignedPermutation> block_product(const std::vector<std::vector<int>>& blocks, int n,
                                             bool diagonal_only) {
    std::vector<std::vector<std::pair<std::vector<int>, std::vector<int>>>> per_block;
    for (const auto& block : blocks) {
        const int m = static_cast<int>(block.size());
        std::vector<std::pair<std::vector<int>, std::vector<int>>> choices;
        std::vector<int> p(m);
        std::iota(p.begin(), p.end(), 0);
        std::vector<std::vector<int>> signs;
        if (diagonal_only) {
            sign_patterns(m, 1, signs);
            for (auto& s : signs) choices.emplace_back(p, s);
        } else {
            do {
                const int parity = permutation_parity(p);
                sign_patterns(m, parity, signs);
                for (auto& s : signs) choices.emplace_back(p, s);
            } while (std::next_permutation(p.begin(), p.end()));
        }
        per_block.push_back(std::move(choices));
    }

    std::vector<SignedPermutation> out;
    std::vector<size_t> idx(per_block.size(), 0);
    while (true) {
        std::vector<int> perm(n), sign(n);
        for (size_t b = 0; b < per_block.size(); ++b) {
            const auto& [bp, bs] = per_block[b][idx[b]];
            const auto& block = blocks[b];
            for (size_t t = 0; t < block.size(); ++t) {
                perm[block[t]] = block[bp[t]];
                sign[block[t]] = bs[t];
            }
        }
        out.emplace_back(perm, sign);
        size_t b = 0;
        while (b < idx.size() && ++idx[b] == per_block[b].size()) idx[b++] = 0;
        if (b == idx.size()) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<SignedPermutation> enumerate_UH(const Matrix& h, double tol) {
    return block_product(level_sets(h, tol), static_cast<int>(h.rows()), false);
}

std::vector<SignedPermutation> enumerate_CH(const Matrix& h, double tol) {
    return block_product(level_sets(h, tol), static_cast<int>(h.rows()), true);
}

std::string to_string(SubgroupTag tag) {
    switch (tag) {
        case SubgroupTag::U_H: return "U_H";
        case SubgroupTag::U_H_g: return "U_H^g";
        case SubgroupTag::C_H: return "C_H";
        case SubgroupTag::C_H_g: return "C_H^g";
    }
    return "?";
}

std::vector<CosetLabel> right_cosets(const std::vector<SignedPermutation>& subgroup,
                                     const std::vector<SignedPermutation>& group,
                                     SubgroupTag tag) {
    std::vector<CosetLabel> out;
    std::unordered_set<std::uint64_t> assigned;
    for (const auto& u : group) {
        if (assigned.count(u.encode())) continue;
        SignedPermutation rep = u;
        for (const auto& s : subgroup) {
            const auto su = s.compose(u);
            assigned.insert(su.encode());
            if (su < rep) rep = su;
        }
        out.push_back({rep, tag});
    }
    std::sort(out.begin(), out.end());
    return out;
}

SignedPermutation coset_representative(const SignedPermutation& u,
                                       const std::vector<SignedPermutation>& subgroup) {
    SignedPermutation rep = u;
    for (const auto& s : subgroup) {
        const auto su = s.compose(u);
        if (su < rep) rep = su;
    }
    return rep;
}

std::vector<int> weyl_project(const SignedPermutation& u) {
    std::vector<int> p(u.size());
    for (int j = 0; j < u.size(); ++j) p[j] = u.perm(j);
    return p;
}

SignedPermutation principal_involution(int n) {
    std::vector<int> p(n), s(n);
    for (int j = 0; j < n; ++j) {
        p[j] = n - 1 - j;
        s[j] = (j % 2 == 0) ? 1 : -1;
    }
    SignedPermutation u(p, s);
    if (u.determinant() != 1) {
        s[n - 1] = -s[n - 1];
        u = SignedPermutation(p, s);
    }
    return u;
}

}  // namespace kflow::structure
