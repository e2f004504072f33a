#include "kflow/flow.hpp"

#include "kflow/structure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace kflow::flow {

namespace {

// kappa with column prescaling: kappa(M D) = kappa(M) for positive diagonal
// D, so normalizing columns first makes the projection safe for matrices
// whose columns span many orders of magnitude.
Matrix kappa_scaled(const Matrix& m, const TolerancePolicy& tol) {
    const auto n = m.rows();
    Matrix scaled = m;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = scaled.col(j).cwiseAbs().maxCoeff();
        if (s <= 0.0 || !std::isfinite(s))
            throw NumericalBreakdown("kappa: degenerate column");
        scaled.col(j) /= s;
    }
    return linalg::iwasawa_project(scaled, tol, linalg::DetCheck::off).k;
}

}  // namespace

CompactPoint act(const Matrix& g, const CompactPoint& k, const TolerancePolicy& tol,
                 linalg::DetCheck check) {
    if (check == linalg::DetCheck::on) {
        const double det = g.determinant();
        if (std::abs(det - 1.0) > tol.eps_det)
            throw NonUnimodular("act: |det g - 1| = " + std::to_string(std::abs(det - 1.0)));
    }
    return CompactPoint(kappa_scaled(g * k.mat(), tol), tol);
}

CompactPoint act_time(const jordan::FlowSpec& flow, double t, const CompactPoint& k) {
    const TolerancePolicy& tol = flow.tol;
    if (t == 0.0) return k;

    // On fix(h^t) the hyperbolic factor acts trivially, so the flow there is
    // exactly kappa(e^t u^t k). Using that identity matters numerically: a
    // stored point sits O(eps) off the fixed set, and h^t would amplify the
    // transverse part of that error by e^{mu t}.
    const CompactPoint h_moved = act(flow.triple.h, k, tol, linalg::DetCheck::off);
    if (distance(h_moved, k) <= tol.eps_fix) {
        const Matrix moved = flow.elliptic_at(t) * kappa_scaled(flow.unipotent_at(t) * k.mat(), tol);
        return CompactPoint(kappa_scaled(moved, tol), tol);
    }

    // General point: kappa(e^t h^t u^t k) = kappa(e^t kappa(h^t kappa(u^t k))),
    // with the hyperbolic part chunked so exp stays within range.
    CompactPoint cur(kappa_scaled(flow.unipotent_at(t) * k.mat(), tol), tol);
    double max_rate = 0.0;
    const Matrix& H = flow.triple.H;
    for (Eigen::Index i = 0; i < H.rows(); ++i) max_rate = std::max(max_rate, std::abs(H(i, i)));
    if (max_rate > 0.0) {
        const double chunk_cap = 200.0 / max_rate;
        double remaining = t;
        while (remaining != 0.0) {
            const double step = std::clamp(remaining, -chunk_cap, chunk_cap);
            cur = CompactPoint(kappa_scaled(flow.hyperbolic_at(step) * cur.mat(), tol), tol);
            remaining -= step;
        }
    }
    return CompactPoint(kappa_scaled(flow.elliptic_at(t) * cur.mat(), tol), tol);
}

Trajectory trajectory(const jordan::FlowSpec& flow, const CompactPoint& k0, double horizon,
                      double step) {
    if (horizon <= 0) throw std::invalid_argument("trajectory: horizon must be positive");
    if (flow.mode == jordan::TimeMode::discrete) step = 1.0;
    if (step <= 0) throw std::invalid_argument("trajectory: step must be positive");

    Trajectory out;
    CompactPoint cur = k0;
    out.times.push_back(0.0);
    out.samples.push_back(cur.mat());
    const Matrix g_step = flow.element_at(step);
    for (double t = step; t <= horizon + 1e-12; t += step) {
        cur = act(g_step, cur, flow.tol, linalg::DetCheck::off);
        out.times.push_back(t);
        out.samples.push_back(cur.mat());
    }
    return out;
}

std::pair<CompactPoint, double> project_to_fixed_set(const Matrix& center, const Matrix& H) {
    const int n = static_cast<int>(center.rows());
    const auto blocks = structure::level_sets(H);
    const auto group = structure::enumerate_U(n);

    double best = std::numeric_limits<double>::infinity();
    Matrix best_point;
    for (const auto& u : group) {
        const Matrix d = center * u.matrix().transpose();
        Matrix proj = Matrix::Zero(n, n);
        for (const auto& block : blocks) {
            const int m = static_cast<int>(block.size());
            Matrix sub(m, m);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) sub(a, b) = d(block[a], block[b]);
            Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Matrix rot = svd.matrixU() * svd.matrixV().transpose();
            if (rot.determinant() < 0) {
                // Nearest special-orthogonal block: flip the least singular
                // direction.
                Matrix flip = Matrix::Identity(m, m);
                flip(m - 1, m - 1) = -1.0;
                rot = svd.matrixU() * flip * svd.matrixV().transpose();
            }
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) proj(block[a], block[b]) = rot(a, b);
        }
        const Matrix candidate = proj * u.matrix();
        const double dist = (center - candidate).norm();
        if (dist < best) {
            best = dist;
            best_point = candidate;
        }
    }
    return {CompactPoint(best_point), best};
}

std::optional<OmegaLimit> omega_limit(const jordan::FlowSpec& flow, const CompactPoint& k0,
                                      double stab_tol, double max_time, Direction dir) {
    if (stab_tol < flow.tol.eps_fix)
        throw std::invalid_argument("omega_limit: stabilization tolerance below eps_fix");
    const double step = flow.mode == jordan::TimeMode::discrete ? 1.0 : 0.1;
    const double signed_step = dir == Direction::forward ? step : -step;
    const Matrix g_step = flow.element_at(signed_step);

    constexpr int kWindow = 10;
    std::deque<Matrix> tail;
    CompactPoint cur = k0;
    tail.push_back(cur.mat());
    int stable = 0;
    for (double t = step; t <= max_time + 1e-12; t += step) {
        CompactPoint next = act(g_step, cur, flow.tol, linalg::DetCheck::off);
        const double moved = distance(next, cur);
        cur = next;
        tail.push_back(cur.mat());
        if (static_cast<int>(tail.size()) > kWindow + 1) tail.pop_front();
        stable = moved < stab_tol ? stable + 1 : 0;
        if (stable >= kWindow) {
            Matrix center = Matrix::Zero(cur.dim(), cur.dim());
            for (const auto& s : tail) center += s;
            center /= static_cast<double>(tail.size());
            auto [point, gap] = project_to_fixed_set(center, flow.triple.H);
            return OmegaLimit{point, gap, t};
        }
    }
    return std::nullopt;
}

bool is_fixed_unipotent(const Matrix& u, const CompactPoint& k, const TolerancePolicy& tol) {
    const CompactPoint moved = act(u, k, tol, linalg::DetCheck::off);
    return distance(moved, k) <= tol.eps_fix;
}

bool is_recurrent(const jordan::FlowSpec& flow, const CompactPoint& k) {
    const CompactPoint hk = act(flow.triple.h, k, flow.tol, linalg::DetCheck::off);
    if (distance(hk, k) > flow.tol.eps_fix) return false;
    return is_fixed_unipotent(flow.triple.u, k, flow.tol);
}

namespace {

Matrix polar_rotation(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix rot = svd.matrixU() * svd.matrixV().transpose();
    if (rot.determinant() < 0) {
        Matrix flip = Matrix::Identity(m.rows(), m.cols());
        flip(m.rows() - 1, m.cols() - 1) = -1.0;
        rot = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return rot;
}

}  // namespace

CompactPoint unipotent_limit(const jordan::FlowSpec& flow, const CompactPoint& k, Direction dir,
                             double limit_tol) {
    const double sign = dir == Direction::forward ? 1.0 : -1.0;
    const TolerancePolicy& tol = flow.tol;

    // kappa(u^t k) converges like L + a/t + O(1/t^2); Richardson over the
    // nodes (t, 2t, 4t) cancels through 1/t^2, so the probes stay at times
    // where Gram-Schmidt is still well conditioned.
    auto probe = [&](double t) {
        return kappa_scaled(flow.unipotent_at(sign * t) * k.mat(), tol);
    };
    auto extrapolate = [&](double t) {
        const Matrix raw = probe(t) / 3.0 - 2.0 * probe(2.0 * t) + (8.0 / 3.0) * probe(4.0 * t);
        return polar_rotation(raw);
    };

    Matrix prev = extrapolate(8.0);
    for (double t = 16.0; t <= 1.1e5; t *= 2.0) {
        Matrix next;
        try {
            next = extrapolate(t);
        } catch (const NumericalBreakdown&) {
            break;  // probes beyond double precision; report below
        }
        if ((next - prev).norm() < 0.5 * limit_tol) return CompactPoint(next, tol);
        prev = next;
    }
    throw SearchExhausted("unipotent_limit: no Cauchy stabilization below the time cap");
}

namespace {

double search_increment(const jordan::FlowSpec& flow) {
    return flow.mode == jordan::TimeMode::discrete ? 1.0 : 0.05;
}

}  // namespace

Chain build_chain(const jordan::FlowSpec& flow, const CompactPoint& k, double epsilon,
                  double min_time) {
    if (epsilon <= 0 || min_time <= 0)
        throw std::invalid_argument("build_chain: epsilon and T must be positive");
    const TolerancePolicy& tol = flow.tol;
    const CompactPoint hk = act(flow.triple.h, k, tol, linalg::DetCheck::off);
    if (distance(hk, k) > tol.eps_fix)
        throw std::invalid_argument("build_chain: base point is not fixed by the hyperbolic part");

    const auto n = k.dim();
    const double step = search_increment(flow);

    // Fully fixed points close up in one jump.
    {
        const double t0 = flow.mode == jordan::TimeMode::discrete
                              ? std::ceil(min_time + 1.0)
                              : min_time + step;
        const CompactPoint moved = act_time(flow, t0, k);
        if (distance(moved, k) < epsilon) {
            Chain c;
            c.points = {k.mat(), k.mat()};
            c.times = {t0};
            c.epsilon = epsilon;
            c.min_time = min_time;
            return c;
        }
    }

    const double slack = epsilon / 8.0;
    const CompactPoint k_plus = unipotent_limit(flow, k, Direction::forward, slack / 8.0);
    const CompactPoint k_minus = unipotent_limit(flow, k, Direction::backward, slack / 8.0);

    const Matrix m_raw = k_minus.mat().transpose() * k_plus.mat();
    const auto m_rounded = structure::SignedPermutation::from_matrix(m_raw, 0.2);
    if (!m_rounded || !m_rounded->is_diagonal())
        throw SearchExhausted("build_chain: unipotent limits do not differ by an element of M");
    const Matrix m_mat = m_rounded->matrix();
    if ((k_minus.mat() * m_mat - k_plus.mat()).norm() > slack / 2.0)
        throw SearchExhausted("build_chain: limit fiber residual too large");

    // Search s > T with e^s near 1 and both unipotent probes settled.
    constexpr long long kCap = 100000;
    double s_found = -1.0;
    double s = flow.mode == jordan::TimeMode::discrete ? std::ceil(min_time + 1.0)
                                                       : min_time + step;
    for (long long iter = 0; iter < kCap; ++iter, s += step) {
        const Matrix e_s = flow.elliptic_at(s);
        if ((e_s - Matrix::Identity(n, n)).norm() >= slack) continue;
        const Matrix up = kappa_scaled(flow.unipotent_at(s) * k.mat(), tol);
        if ((up - k_plus.mat()).norm() >= slack) continue;
        const Matrix um = kappa_scaled(flow.unipotent_at(-s) * k.mat(), tol);
        if ((um - k_minus.mat()).norm() >= slack) continue;
        s_found = s;
        break;
    }
    if (s_found < 0)
        throw SearchExhausted("build_chain: no admissible time below the 1e5-candidate cap");

    // m is diagonal +-1 so m^2 = 1: the walk closes after one or two legs.
    const int p = (*m_rounded == structure::SignedPermutation::identity(n)) ? 1 : 2;

    Chain c;
    c.epsilon = epsilon;
    c.min_time = min_time;
    const Matrix back = flow.elliptic_at(-s_found) * flow.unipotent_at(-s_found);
    Matrix km = k.mat();
    c.points.push_back(k.mat());
    for (int i = 1; i <= p; ++i) {
        km = km * m_mat;
        c.points.push_back(kappa_scaled(back * km, tol));
        c.times.push_back(s_found);
        // Final marker point: k m^p equals k exactly since m^2 = 1.
        c.points.push_back(i == p ? k.mat() : km);
        c.times.push_back(s_found);
    }
    if (!verify_chain(c, flow))
        throw SearchExhausted("build_chain: constructed chain failed verification");
    return c;
}

bool verify_chain(const Chain& chain, const jordan::FlowSpec& flow) {
    if (chain.points.size() != chain.times.size() + 1 || chain.times.empty()) return false;
    for (size_t i = 0; i < chain.times.size(); ++i) {
        if (chain.times[i] < chain.min_time) return false;
        const CompactPoint from(chain.points[i], flow.tol);
        const CompactPoint moved = act_time(flow, chain.times[i], from);
        if ((moved.mat() - chain.points[i + 1]).norm() >= chain.epsilon) return false;
    }
    return true;
}

}  // namespace kflow::flow
