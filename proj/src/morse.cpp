#include "kflow/morse.hpp"

#include <algorithm>
#include <cmath>

namespace kflow::morse {

namespace {

bool matches_component(const Matrix& d, const std::vector<std::vector<int>>& blocks,
                       double eps) {
    const auto n = d.rows();
    std::vector<int> block_of(n, -1);
    for (size_t b = 0; b < blocks.size(); ++b)
        for (int i : blocks[b]) block_of[i] = static_cast<int>(b);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (block_of[i] != block_of[j] && std::abs(d(i, j)) > eps) return false;
    for (const auto& block : blocks) {
        const int m = static_cast<int>(block.size());
        Matrix sub(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) sub(a, b) = d(block[a], block[b]);
        if (sub.determinant() <= 0.0) return false;
    }
    return true;
}

}  // namespace

std::optional<structure::CosetLabel> fixed_component_of(const CompactPoint& k, const Matrix& H,
                                                        const TolerancePolicy& tol) {
    const int n = k.dim();
    const auto blocks = structure::level_sets(H);
    const auto group = structure::enumerate_U(n);
    const auto stabilizer = structure::enumerate_UH(H);
    for (const auto& u : group) {
        const Matrix d = k.mat() * u.matrix().transpose();
        if (matches_component(d, blocks, tol.eps_fix)) {
            return structure::CosetLabel{structure::coset_representative(u, stabilizer),
                                         structure::SubgroupTag::U_H};
        }
    }
    return std::nullopt;
}

std::vector<structure::CosetLabel> fixed_set(const Matrix& H) {
    bool zero = true;
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        if (std::abs(H(i, i)) > 1e-9) zero = false;
    if (zero) throw ZeroElement("fixed_set: H = 0 fixes all of K");
    const int n = static_cast<int>(H.rows());
    return structure::right_cosets(structure::enumerate_UH(H), structure::enumerate_U(n),
                                   structure::SubgroupTag::U_H);
}

namespace {

std::vector<structure::SignedPermutation> twisted_stabilizer(const jordan::FlowSpec& flow) {
    // U_H^g = U_H united with c_g U_H.
    auto uh = structure::enumerate_UH(flow.triple.H);
    const auto& cg = flow.cg;
    std::vector<structure::SignedPermutation> out = uh;
    for (const auto& s : uh) {
        const auto t = cg.compose(s);
        if (!std::binary_search(uh.begin(), uh.end(), t)) out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<MorseLabel> morse_components(const jordan::FlowSpec& flow) {
    const Matrix& H = flow.triple.H;
    fixed_set(H);  // ZeroElement guard
    const int n = flow.dim();

    const auto group = structure::enumerate_U(n);
    const auto uhg = twisted_stabilizer(flow);
    const auto cosets = structure::right_cosets(uhg, group, structure::SubgroupTag::U_H_g);

    const auto c_group = structure::enumerate_C(n);
    const auto ch = structure::enumerate_CH(flow.triple.H);
    const bool split_components = !std::binary_search(ch.begin(), ch.end(), flow.cg);
    const int dim = structure::centralizer_dimension(H);
    const auto u_minus = structure::principal_involution(n);

    std::vector<MorseLabel> out;
    out.reserve(cosets.size());
    for (const auto& coset : cosets) {
        MorseLabel label;
        label.coset = coset;
        label.component_count = split_components ? 2 : 1;
        label.dimension = dim;
        out.push_back(label);
    }
    auto find_by_rep = [&](const structure::SignedPermutation& rep) -> MorseLabel* {
        for (auto& l : out)
            if (l.coset.representative == rep) return &l;
        return nullptr;
    };
    for (const auto& c : c_group) {
        if (auto* l = find_by_rep(structure::coset_representative(c, uhg))) l->is_attractor = true;
        const auto cu = c.compose(u_minus);
        if (auto* l = find_by_rep(structure::coset_representative(cu, uhg))) l->is_repeller = true;
    }
    return out;
}

std::optional<MorseLabel> lift_label(const std::vector<MorseLabel>& labels,
                                     const structure::SignedPermutation& u,
                                     const jordan::FlowSpec& flow) {
    const auto uhg = twisted_stabilizer(flow);
    const auto rep = structure::coset_representative(u, uhg);
    for (const auto& l : labels)
        if (l.coset.representative == rep) return l;
    return std::nullopt;
}

BasinClassification classify_basin(const jordan::FlowSpec& flow, const CompactPoint& k,
                                   double stab_tol, double horizon) {
    const auto labels = morse_components(flow);
    BasinClassification out;

    for (const auto dir : {flow::Direction::forward, flow::Direction::backward}) {
        auto limit = flow::omega_limit(flow, k, stab_tol, horizon, dir);
        if (!limit) limit = flow::omega_limit(flow, k, stab_tol, 4.0 * horizon, dir);
        if (!limit) continue;
        const auto comp = fixed_component_of(limit->limit, flow.triple.H, flow.tol);
        if (!comp) continue;
        const auto label = lift_label(labels, comp->representative, flow);
        if (!label) continue;
        if (dir == flow::Direction::forward) {
            out.forward = label;
            out.forward_time = limit->time_reached;
        } else {
            out.backward = label;
            out.backward_time = limit->time_reached;
        }
    }
    return out;
}

std::vector<CompactPoint> stable_manifold_sample(const MorseLabel& label, int count,
                                                 const jordan::FlowSpec& flow,
                                                 std::mt19937_64& rng) {
    const Matrix& H = flow.triple.H;
    const int n = flow.dim();
    const auto nh_basis = structure::subalgebra_basis(structure::SubalgebraKind::n_minus_H, n, &H);
    const auto kh_basis = structure::subalgebra_basis(structure::SubalgebraKind::k_H, n, &H);
    const Matrix u = label.coset.representative.matrix();

    std::uniform_real_distribution<double> cube(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::vector<CompactPoint> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Matrix y = Matrix::Zero(n, n);
        for (const auto& b : nh_basis) y += cube(rng) * b;
        Matrix z = Matrix::Zero(n, n);
        for (const auto& b : kh_basis) z += angle(rng) * b;
        const Matrix point = jordan::expm_nilpotent(y, 1.0) * linalg::expm(z) * u;
        out.push_back(flow::act(point, CompactPoint::identity(n), flow.tol,
                                linalg::DetCheck::off));
    }
    return out;
}

namespace {

// Deterministic non-special point of K_H^0: fixed irrational-ish mixture of
// the rotation generators.
Matrix generic_rotation(const Matrix& H, int n, int which) {
    const auto kh_basis = structure::subalgebra_basis(structure::SubalgebraKind::k_H, n, &H);
    Matrix z = Matrix::Zero(n, n);
    double coeff = which == 0 ? 0.83 : 2.31;
    for (const auto& b : kh_basis) {
        z += coeff * b;
        coeff *= 0.7071067811865476;
    }
    return linalg::expm(z);
}

}  // namespace

std::vector<CompactPoint> recurrent_points(const jordan::FlowSpec& flow) {
    const Matrix& H = flow.triple.H;
    const int n = flow.dim();
    const TolerancePolicy& tol = flow.tol;

    bool h_zero = true;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(H(i, i)) > 1e-9) h_zero = false;

    std::vector<CompactPoint> found;
    auto push_unique = [&](const CompactPoint& p) {
        for (const auto& q : found)
            if (distance(p, q) < 1e-6) return;
        found.push_back(p);
    };

    if (h_zero) {
        // Candidates from the finite group U.
        for (const auto& u : structure::enumerate_U(n)) {
            const CompactPoint p(u.matrix());
            if (flow::is_recurrent(flow, p)) push_unique(p);
        }
        return found;
    }

    const auto cosets = fixed_set(H);
    const bool unipotent_trivial =
        max_norm(flow.triple.u - Matrix::Identity(n, n)) <= tol.eps_fix;

    for (const auto& coset : cosets) {
        const Matrix u = coset.representative.matrix();
        if (unipotent_trivial) {
            push_unique(CompactPoint(u));
            continue;
        }
        // In-component unipotent limits from two generic samples catch the
        // attracting and repelling fixed points of the restricted flow.
        for (int which = 0; which < 2; ++which) {
            const CompactPoint sample(generic_rotation(H, n, which) * u, tol);
            for (const auto dir : {flow::Direction::forward, flow::Direction::backward}) {
                const CompactPoint lim = flow::unipotent_limit(flow, sample, dir, tol.eps_fix);
                const auto [proj, gap] = flow::project_to_fixed_set(lim.mat(), H);
                if (gap < 1e-6 && flow::is_recurrent(flow, proj)) push_unique(proj);
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const CompactPoint& a, const CompactPoint& b) {
        const auto &ma = a.mat(), &mb = b.mat();
        for (Eigen::Index i = 0; i < ma.size(); ++i) {
            const double da = ma(i / ma.cols(), i % ma.cols());
            const double db = mb(i / mb.cols(), i % mb.cols());
            if (std::abs(da - db) > 1e-9) return da < db;
        }
        return false;
    });
    return found;
}

}  // namespace kflow::morse
