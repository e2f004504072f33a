#include "kflow/geometry.hpp"

#include "kflow/flow.hpp"
#include "kflow/morse.hpp"
#include "kflow/structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kflow::geometry {

MetricSpec MetricSpec::standard(int n) {
    MetricSpec spec;
    spec.H_r = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) spec.H_r(i, i) = static_cast<double>(n - 1 - 2 * i);
    return spec;
}

void MetricSpec::validate() const {
    if (c0 <= 0) throw std::invalid_argument("MetricSpec: c0 must be positive");
    for (Eigen::Index i = 0; i + 1 < H_r.rows(); ++i)
        if (H_r(i, i) <= H_r(i + 1, i + 1))
            throw std::invalid_argument("MetricSpec: H_r must be regular (strictly decreasing)");
}

double height(const CompactPoint& k, const Matrix& H, const MetricSpec& spec) {
    const Matrix ad = k.mat() * spec.H_r * k.mat().transpose();
    return (ad * H.transpose()).trace();
}

Matrix realize_tangent(const Matrix& y, const CompactPoint& k) {
    const Matrix w = k.mat().transpose() * y * k.mat();
    const auto n = w.rows();
    Matrix skew = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            skew(i, j) = w(i, j);
            skew(j, i) = -w(i, j);
        }
    return k.mat() * skew;
}

Matrix induced_field(const Matrix& H, const CompactPoint& k) { return realize_tangent(H, k); }

Matrix induced_field_fd(const Matrix& H, const CompactPoint& k, double delta) {
    const CompactPoint moved =
        flow::act(linalg::expm(delta * H), k, TolerancePolicy{}, linalg::DetCheck::off);
    return (moved.mat() - k.mat()) / delta;
}

namespace {

void require_strictly_lower(const Matrix& x) {
    const double scale = std::max(1.0, max_norm(x));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = i; j < x.cols(); ++j)
            if (std::abs(x(i, j)) > 1e-12 * scale)
                throw std::invalid_argument("borel_metric: arguments must be strictly lower triangular");
}

}  // namespace

double borel_metric(const Matrix& x, const Matrix& y, const MetricSpec& spec) {
    spec.validate();
    require_strictly_lower(x);
    require_strictly_lower(y);
    const auto n = x.rows();

    // Route 1: graded sum over ad(H_r)-eigenspaces with c_lambda = -2 lambda.
    std::map<double, double> graded;  // lambda -> <X_lambda, Y_lambda>
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double lambda = spec.H_r(i, i) - spec.H_r(j, j);
            graded[lambda] += x(i, j) * y(i, j);
        }
    double route1 = 0.0;
    for (const auto& [lambda, inner] : graded) route1 += -2.0 * lambda * inner;

    // Route 2: closed bracket form (the m-component vanishes for sl(n,R),
    // so the c0 term contributes nothing).
    const Matrix bracket = x * spec.H_r - spec.H_r * x;
    const double route2 = 2.0 * (bracket * y.transpose()).trace();

    if (std::abs(route1 - route2) > 1e-10 * std::max(1.0, std::abs(route1)))
        throw DisagreementBug("borel_metric: graded and bracket forms disagree by " +
                              std::to_string(std::abs(route1 - route2)));
    return route1;
}

double gradient_residual(const Matrix& H, const MetricSpec& spec, const CompactPoint& k,
                         const TolerancePolicy& tol) {
    const int n = k.dim();
    const auto basis = structure::subalgebra_basis(structure::SubalgebraKind::n_minus, n);
    const int m = static_cast<int>(basis.size());
    const double delta = tol.delta_fd;

    // Central differences of f_H along the orbit curves k exp(t X_i) b.
    Vector rhs(m);
    for (int i = 0; i < m; ++i) {
        const Matrix fwd = k.mat() * jordan::expm_nilpotent(basis[i], delta);
        const Matrix bwd = k.mat() * jordan::expm_nilpotent(basis[i], -delta);
        const CompactPoint kf(linalg::iwasawa_project(fwd, tol, linalg::DetCheck::off).k, tol);
        const CompactPoint kb(linalg::iwasawa_project(bwd, tol, linalg::DetCheck::off).k, tol);
        rhs(i) = (height(kf, H, spec) - height(kb, H, spec)) / (2.0 * delta);
    }

    Matrix gram(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) {
            gram(i, j) = borel_metric(basis[i], basis[j], spec);
            gram(j, i) = gram(i, j);
        }
    const Vector gamma = gram.ldlt().solve(rhs);

    Matrix grad_alg = Matrix::Zero(n, n);
    for (int i = 0; i < m; ++i) grad_alg += gamma(i) * basis[i];
    const Matrix grad = k.mat() * (grad_alg - grad_alg.transpose());
    return (grad - induced_field(H, k)).norm();
}

bool monotonicity_check(const Matrix& H, const MetricSpec& spec, const CompactPoint& k0,
                        double horizon, const TolerancePolicy& tol) {
    const double step = 0.1;
    const Matrix h_step = linalg::expm(step * H);
    CompactPoint cur = k0;
    double prev = height(cur, H, spec);
    for (double t = step; t <= horizon + 1e-12; t += step) {
        cur = flow::act(h_step, cur, tol, linalg::DetCheck::off);
        const double val = height(cur, H, spec);
        if (val < prev - 1e-10) return false;
        prev = val;
    }
    return true;
}

namespace {

Eigen::VectorXd vectorize(const Matrix& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// Basis of span(a) intersect span(b), via the kernel of [A | -B].
std::vector<Matrix> intersect_spans(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.empty() || b.empty()) return {};
    const auto n = a[0].rows();
    Eigen::MatrixXd stacked(n * n, a.size() + b.size());
    for (size_t i = 0; i < a.size(); ++i) stacked.col(i) = vectorize(a[i]);
    for (size_t j = 0; j < b.size(); ++j) stacked.col(a.size() + j) = -vectorize(b[j]);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    std::vector<Matrix> out;
    for (Eigen::Index c = 0; c < svd.matrixV().cols(); ++c) {
        const double s = c < sv.size() ? sv(c) : 0.0;
        if (s > 1e-10) continue;
        const Eigen::VectorXd coeff = svd.matrixV().col(c);
        Matrix v = Matrix::Zero(n, n);
        for (size_t i = 0; i < a.size(); ++i) v += coeff(i) * a[i];
        out.push_back(v);
    }
    // Orthonormalize (Cartan inner product = Frobenius on coefficients).
    std::vector<Matrix> ortho;
    for (auto& v : out) {
        for (const auto& w : ortho) v -= (v.cwiseProduct(w)).sum() * w;
        const double norm = v.norm();
        if (norm > 1e-8) ortho.push_back(v / norm);
    }
    return ortho;
}

double ls_slope(const std::vector<double>& ts, const std::vector<double>& logs) {
    const size_t n = ts.size();
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (size_t i = 0; i < n; ++i) {
        st += ts[i];
        sl += logs[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * logs[i];
    }
    const double denom = n * stt - st * st;
    return (n * stl - st * sl) / denom;
}

}  // namespace

TangentSplitting tangent_splitting(const CompactPoint& x, const Matrix& H,
                                   const jordan::FlowSpec& flow) {
    if (!morse::fixed_component_of(x, H, flow.tol))
        throw NotOnComponent("tangent_splitting: base point is not on a Morse component");
    const int n = x.dim();

    // g_x^perp = Ad(k)(m + n^-) = Ad(k) n^- here.
    std::vector<Matrix> perp;
    for (const auto& b : structure::subalgebra_basis(structure::SubalgebraKind::n_minus, n))
        perp.push_back(x.mat() * b * x.mat().transpose());

    const auto nm = structure::subalgebra_basis(structure::SubalgebraKind::n_minus_H, n, &H);
    const auto np = structure::subalgebra_basis(structure::SubalgebraKind::n_plus_H, n, &H);
    const auto gh = structure::subalgebra_basis(structure::SubalgebraKind::g_H, n, &H);

    TangentSplitting split{x, {}, {}, {}, {}, {}, {}};
    split.alg_tm = intersect_spans(gh, perp);
    split.alg_v_minus = intersect_spans(nm, perp);
    split.alg_v_plus = intersect_spans(np, perp);

    const int total = static_cast<int>(split.alg_tm.size() + split.alg_v_minus.size() +
                                       split.alg_v_plus.size());
    if (total != n * (n - 1) / 2)
        throw IllConditioned("tangent_splitting: dimensions sum to " + std::to_string(total) +
                             ", expected " + std::to_string(n * (n - 1) / 2));

    for (const auto& y : split.alg_tm) split.tan_tm.push_back(realize_tangent(y, x));
    for (const auto& y : split.alg_v_minus) split.tan_v_minus.push_back(realize_tangent(y, x));
    for (const auto& y : split.alg_v_plus) split.tan_v_plus.push_back(realize_tangent(y, x));
    return split;
}

RateEstimates rate_estimates(const jordan::FlowSpec& flow, const TangentSplitting& splitting,
                             double horizon) {
    if (!flow.mu)
        throw std::invalid_argument("rate_estimates: flow has H = 0, no spectral gap");
    const double mu = *flow.mu;
    const double T = std::min(horizon, 20.0);
    if (T < 3.0) throw std::invalid_argument("rate_estimates: horizon too short for the fit window");

    const int steps = static_cast<int>(std::floor(T));
    std::vector<Matrix> fwd(steps + 1), bwd(steps + 1);
    for (int t = 0; t <= steps; ++t) {
        fwd[t] = flow.element_at(static_cast<double>(t));
        bwd[t] = flow.element_at(static_cast<double>(-t));
    }

    // Norm profile t -> ||Ad(g^{+-t}) Y|| / ||Y||.
    auto profile = [&](const Matrix& y, bool backward) {
        std::vector<double> logs(steps + 1);
        const double base = y.norm();
        for (int t = 0; t <= steps; ++t) {
            const Matrix& g = backward ? bwd[t] : fwd[t];
            const Matrix& gi = backward ? fwd[t] : bwd[t];
            logs[t] = std::log((g * y * gi).norm() / base);
        }
        return logs;
    };
    std::vector<double> fit_times;
    for (int t = 2; t <= steps; ++t) fit_times.push_back(static_cast<double>(t));
    auto window = [&](const std::vector<double>& logs) {
        return std::vector<double>(logs.begin() + 2, logs.end());
    };

    RateEstimates est{-std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(), 0.0, 1.0};
    const double slack = 1e-9;

    int idx = 0;
    for (const auto& y : splitting.alg_v_minus) {
        const auto logs = profile(y, false);
        const double slope = ls_slope(fit_times, window(logs));
        est.lambda_minus = std::max(est.lambda_minus, slope);
        if (slope > -mu / 2.0 + slack)
            throw BoundViolated("rate_estimates: V- direction " + std::to_string(idx) +
                                " decays at " + std::to_string(slope) + " > -mu/2");
        for (int t = 0; t <= steps; ++t)
            est.c = std::max(est.c, std::exp(logs[t] + mu / 2.0 * t));
        ++idx;
    }
    idx = 0;
    for (const auto& y : splitting.alg_v_plus) {
        const auto logs = profile(y, true);
        const double rate = -ls_slope(fit_times, window(logs));
        est.lambda_plus = std::min(est.lambda_plus, rate);
        if (rate < mu / 2.0 - slack)
            throw BoundViolated("rate_estimates: V+ direction " + std::to_string(idx) +
                                " grows at " + std::to_string(rate) + " < mu/2");
        for (int t = 0; t <= steps; ++t)
            est.c = std::max(est.c, std::exp(logs[t] + mu / 2.0 * t));
        ++idx;
    }
    idx = 0;
    for (const auto& y : splitting.alg_tm) {
        for (const bool backward : {false, true}) {
            const auto logs = profile(y, backward);
            const double slope = ls_slope(fit_times, window(logs));
            est.nu = std::max(est.nu, std::abs(slope));
            if (std::abs(slope) > mu / 4.0 + slack)
                throw BoundViolated("rate_estimates: tangential direction " + std::to_string(idx) +
                                    " drifts at " + std::to_string(slope) + ", beyond mu/4");
            for (int t = 0; t <= steps; ++t)
                est.c = std::max(est.c, std::exp(logs[t] - mu / 4.0 * t));
        }
        ++idx;
    }
    return est;
}

}  // namespace kflow::geometry
