#include "kflow/jordan.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace kflow::jordan {

namespace {

using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

double adaptive_cluster_tol(double requested, const Matrix& m) {
    const double floor = 20.0 * std::sqrt(std::numeric_limits<double>::epsilon()) *
                         std::max(1.0, m.norm());
    return std::max(requested, floor);
}

// Assemble f(A) = S diag-blocks(f(cluster value)) S^{-1} as a real matrix.
Matrix spectral_function(const linalg::Eigendecomposition& ed,
                         const std::function<Complex(Complex)>& f, double imag_tol = 1e-9) {
    const int n = ed.dim();
    CMat d = CMat::Zero(n, n);
    Eigen::Index off = 0;
    for (const auto& cl : ed.clusters) {
        const Complex v = f(cl.value);
        for (int j = 0; j < cl.multiplicity; ++j) d(off + j, off + j) = v;
        off += cl.multiplicity;
    }
    return linalg::real_checked(ed.transform * d * ed.transform_inverse, imag_tol);
}

}  // namespace

TripleResiduals triple_residuals(const JordanTriple& t, const Matrix& reference) {
    TripleResiduals r{};
    const Matrix& e = t.e;
    const Matrix& h = t.h;
    const Matrix& u = t.u;
    r.commutation = std::max({max_norm(e * h - h * e), max_norm(e * u - u * e),
                              max_norm(h * u - u * h)});
    r.product = max_norm(e * h * u - reference);
    const auto n = u.rows();
    Matrix nil = u - Matrix::Identity(n, n);
    Matrix pow = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) pow = pow * nil;
    r.unipotent = max_norm(pow);
    r.elliptic_orth = max_norm(e.transpose() * e - Matrix::Identity(n, n));
    return r;
}

JordanTriple jordan_multiplicative(const Matrix& g, const TolerancePolicy& tol,
                                   double cluster_tol) {
    GroupElement::check(g, tol);
    const auto n = g.rows();
    const auto ed = linalg::eig(g, adaptive_cluster_tol(cluster_tol, g));

    for (const auto& cl : ed.clusters)
        if (std::abs(cl.value) < 1e-12)
            throw IllConditioned("jordan_multiplicative: near-singular eigenvalue cluster");

    JordanTriple t;
    t.h = spectral_function(ed, [](Complex v) { return Complex(std::abs(v)); });
    t.e = spectral_function(ed, [](Complex v) { return v / std::abs(v); });
    // Define u through the quotient so that e h u reproduces g exactly.
    t.u = (t.e * t.h).inverse() * g;
    t.H = spectral_function(ed, [](Complex v) { return Complex(std::log(std::abs(v))); });
    t.H -= (t.H.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
    t.q = Matrix::Identity(n, n);
    t.adapted = false;
    return t;
}

AdditiveParts jordan_additive(const Matrix& x, double cluster_tol) {
    const auto n = x.rows();
    if (n != x.cols()) throw std::invalid_argument("jordan_additive: expected square matrix");
    if (std::abs(x.trace()) > 1e-9 * std::max(1.0, x.norm()))
        throw std::invalid_argument("jordan_additive: expected traceless matrix");

    const auto ed = linalg::eig(x, adaptive_cluster_tol(cluster_tol, x));
    AdditiveParts parts;
    parts.H = spectral_function(ed, [](Complex v) { return Complex(v.real()); });
    parts.E = spectral_function(ed, [](Complex v) { return Complex(0.0, v.imag()); });
    parts.N = x - parts.H - parts.E;
    return parts;
}

namespace {

// Real basis of the eigenspace of `m` for the (real) eigenvalue `value` with
// known multiplicity, via the SVD kernel of m - value I.
Matrix real_eigenspace(const Matrix& m, double value, int multiplicity) {
    const auto n = m.rows();
    const Matrix shifted = m - value * Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
    const double scale = std::max(1.0, m.norm());
    const double kept = svd.singularValues()(n - multiplicity);
    if (kept > 1e-6 * scale)
        throw FrameAdaptationFailed(
            "frame adaptation: eigenspace of hyperbolic part not resolvable, residual " +
            std::to_string(kept));
    return svd.matrixV().rightCols(multiplicity);
}

// Real canonical basis for a semisimple block with unit-modulus (element) or
// imaginary (generator) spectrum: conjugating by the returned basis takes the
// block to rotation / skew-rotation form.
Matrix elliptic_canonical_basis(const Matrix& block) {
    const auto m = block.rows();
    Eigen::ComplexEigenSolver<CMat> es(block.cast<Complex>());
    if (es.info() != Eigen::Success)
        throw FrameAdaptationFailed("frame adaptation: elliptic eigensolver failed");

    Matrix basis(m, m);
    Eigen::Index col = 0;
    std::vector<bool> used(m, false);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (used[i]) continue;
        const Complex lam = es.eigenvalues()(i);
        const Eigen::VectorXcd v = es.eigenvectors().col(i);
        if (std::abs(lam.imag()) <= 1e-9) {
            // Real eigenvalue: rotate the phase so the vector is real.
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            const Complex phase = v(imax) / std::abs(v(imax));
            basis.col(col++) = (v / phase).real();
            used[i] = true;
        } else if (lam.imag() > 0) {
            basis.col(col++) = v.real();
            basis.col(col++) = v.imag();
            used[i] = true;
            // Mark one matching conjugate eigenvalue as consumed.
            for (Eigen::Index j = 0; j < m; ++j) {
                if (!used[j] && std::abs(es.eigenvalues()(j) - std::conj(lam)) < 1e-7) {
                    used[j] = true;
                    break;
                }
            }
        } else {
            continue;  // handled with its conjugate partner
        }
    }
    if (col != m)
        throw FrameAdaptationFailed("frame adaptation: could not pair elliptic eigenvalues");
    Eigen::JacobiSVD<Matrix> svd(basis);
    if (svd.singularValues()(m - 1) < 1e-10 * svd.singularValues()(0))
        throw FrameAdaptationFailed("frame adaptation: elliptic eigenbasis is singular");
    return basis;
}

struct FrameResult {
    Matrix q;                    // adapted = q X q^{-1}, det q = 1
    std::vector<double> levels;  // diagonal of H, nonincreasing
};

// Conjugator diagonalizing the hyperbolic data (element h or logarithm H)
// with nonincreasing spectrum and canonicalizing the elliptic data inside
// each eigenvalue block.
FrameResult build_adapting_conjugator(const Matrix& hyp, bool hyp_is_log, const Matrix& ell,
                                      double cluster_tol) {
    const auto n = hyp.rows();
    const auto ed = linalg::eig(hyp, adaptive_cluster_tol(cluster_tol, hyp));

    // eig orders clusters by descending real part, which is exactly the
    // chamber order for real spectra.
    std::vector<double> values;
    std::vector<int> mults;
    for (const auto& cl : ed.clusters) {
        if (std::abs(cl.value.imag()) > 1e-7)
            throw FrameAdaptationFailed("frame adaptation: hyperbolic part has complex spectrum");
        if (!hyp_is_log && cl.value.real() <= 0.0)
            throw FrameAdaptationFailed("frame adaptation: hyperbolic part not positive");
        values.push_back(cl.value.real());
        mults.push_back(cl.multiplicity);
    }

    Matrix p(n, n);
    Eigen::Index off = 0;
    for (size_t c = 0; c < values.size(); ++c) {
        p.block(0, off, n, mults[c]) = real_eigenspace(hyp, values[c], mults[c]);
        off += mults[c];
    }

    // The elliptic data preserves each eigenspace of the hyperbolic part;
    // canonicalize it block by block.
    const Matrix p_inv = p.inverse();
    const Matrix ell_p = p_inv * ell * p;
    Matrix r = Matrix::Identity(n, n);
    off = 0;
    for (size_t c = 0; c < values.size(); ++c) {
        const Eigen::Index m = mults[c];
        Matrix off_block_err = ell_p.block(off, 0, m, n);
        off_block_err.block(0, off, m, m).setZero();
        if (max_norm(off_block_err) > 1e-6 * std::max(1.0, ell.norm()))
            throw FrameAdaptationFailed(
                "frame adaptation: elliptic part does not preserve the hyperbolic eigenspaces");
        r.block(off, off, m, m) = elliptic_canonical_basis(ell_p.block(off, off, m, m));
        off += m;
    }

    Matrix q = (p * r).inverse();
    double det = q.determinant();
    if (det < 0) {
        q.row(0) *= -1.0;
        det = -det;
    }
    q /= std::pow(det, 1.0 / static_cast<double>(n));

    FrameResult out;
    out.q = q;
    out.levels.resize(n);
    off = 0;
    for (size_t c = 0; c < values.size(); ++c) {
        const double level = hyp_is_log ? values[c] : std::log(values[c]);
        for (int j = 0; j < mults[c]; ++j) out.levels[off + j] = level;
        off += mults[c];
    }
    // Project the levels to exact zero sum.
    double mean = 0;
    for (double v : out.levels) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : out.levels) v -= mean;
    return out;
}

bool is_adapted_already(const JordanTriple& t, const TolerancePolicy& tol) {
    const auto n = t.h.rows();
    const double scale = std::max(1.0, max_norm(t.h));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && std::abs(t.h(i, j)) > 1e-12 * scale) return false;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (t.h(i, i) < t.h(i + 1, i + 1) - 1e-12 * scale) return false;
    for (Eigen::Index i = 0; i < n; ++i)
        if (t.h(i, i) <= 0.0) return false;
    return max_norm(t.e.transpose() * t.e - Matrix::Identity(n, n)) <= tol.eps_orth;
}

Matrix polar_orthogonal(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

JordanTriple adapt_frame(const JordanTriple& triple, const TolerancePolicy& tol) {
    const auto n = triple.h.rows();
    const Matrix identity = Matrix::Identity(n, n);

    if (is_adapted_already(triple, tol)) {
        JordanTriple out = triple;
        out.H = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) out.H(i, i) = std::log(triple.h(i, i));
        out.H -= (out.H.trace() / static_cast<double>(n)) * identity;
        if (out.q.size() == 0) out.q = identity;
        out.adapted = true;
        return out;
    }

    const FrameResult frame = build_adapting_conjugator(triple.h, /*hyp_is_log=*/false,
                                                        triple.e, 1e-7);
    const Matrix q_inv = frame.q.inverse();

    JordanTriple out;
    out.H = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out.H(i, i) = frame.levels[i];
    out.h = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out.h(i, i) = std::exp(frame.levels[i]);

    Matrix e_ad = frame.q * triple.e * q_inv;
    const double orth_defect = max_norm(e_ad.transpose() * e_ad - identity);
    if (orth_defect > 1e-7)
        throw FrameAdaptationFailed("frame adaptation: elliptic factor orthogonality defect " +
                                    std::to_string(orth_defect));
    out.e = polar_orthogonal(e_ad);

    const Matrix g_ad = frame.q * (triple.e * triple.h * triple.u) * q_inv;
    out.u = (out.e * out.h).inverse() * g_ad;
    out.q = (triple.q.size() != 0) ? Matrix(frame.q * triple.q) : frame.q;
    out.adapted = true;
    return out;
}

structure::SignedPermutation component_sign(const Matrix& g, const Matrix& H,
                                            const TolerancePolicy& tol) {
    const auto n = g.rows();
    const double comm = max_norm(g * H - H * g);
    if (comm > tol.eps_fix * std::max(1.0, max_norm(g) * std::max(1.0, max_norm(H))))
        throw NotInCentralizer("component_sign: [g, H] residual " + std::to_string(comm));

    std::vector<int> perm(n), sign(n, 1);
    std::iota(perm.begin(), perm.end(), 0);
    for (const auto& block : structure::level_sets(H)) {
        const int m = static_cast<int>(block.size());
        Matrix sub(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) sub(a, b) = g(block[a], block[b]);
        const double det = sub.determinant();
        if (std::abs(det) < 1e-12)
            throw IllConditioned("component_sign: singular diagonal block");
        sign[block[0]] = det > 0 ? 1 : -1;
    }
    return structure::SignedPermutation(perm, sign);
}

Matrix nilpotent_log(const Matrix& u) {
    const auto n = u.rows();
    const Matrix m = u - Matrix::Identity(n, n);
    Matrix term = m;
    Matrix acc = Matrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        acc += (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k) * term;
        term = term * m;
    }
    return acc;
}

Matrix expm_nilpotent(const Matrix& n_mat, double t) {
    const auto n = n_mat.rows();
    Matrix acc = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    double fact = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        term = term * (t * n_mat);
        fact *= static_cast<double>(k);
        acc += term / fact;
    }
    return acc;
}

namespace {

long long checked_integer_time(double t) {
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-9)
        throw std::invalid_argument("discrete flow sampled at non-integer time");
    return static_cast<long long>(r);
}

}  // namespace

Matrix FlowSpec::hyperbolic_at(double t) const {
    const auto n = dim();
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = std::exp(t * triple.H(i, i));
    return h;
}

Matrix FlowSpec::elliptic_at(double t) const {
    if (mode == TimeMode::discrete) return linalg::powi(triple.e, checked_integer_time(t));
    return linalg::expm(t * additive->E);
}

Matrix FlowSpec::unipotent_at(double t) const {
    if (mode == TimeMode::discrete) checked_integer_time(t);
    return expm_nilpotent(nilpotent_log_, t);
}

Matrix FlowSpec::element_at(double t) const {
    return elliptic_at(t) * hyperbolic_at(t) * unipotent_at(t);
}

FlowSpec make_flow(TimeMode mode, const Matrix& generator, const TolerancePolicy& tol) {
    tol.validate();
    FlowSpec flow;
    flow.mode = mode;
    flow.generator = generator;
    flow.tol = tol;
    const auto n = generator.rows();

    if (mode == TimeMode::discrete) {
        flow.triple = adapt_frame(jordan_multiplicative(generator, tol), tol);
        flow.nilpotent_log_ = nilpotent_log(flow.triple.u);
    } else {
        if (std::abs(generator.trace()) > 1e-9 * std::max(1.0, generator.norm()))
            throw std::invalid_argument("make_flow: continuous generator must be traceless");
        const AdditiveParts raw = jordan_additive(generator);

        // Adapted position for additive data: H diagonal nonincreasing and E
        // skew-symmetric.
        bool already = max_norm(raw.E + raw.E.transpose()) <= 1e-12 * std::max(1.0, raw.E.norm());
        const double h_scale = std::max(1.0, max_norm(raw.H));
        for (Eigen::Index i = 0; i < n && already; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j && std::abs(raw.H(i, j)) > 1e-12 * h_scale) already = false;
        for (Eigen::Index i = 0; i + 1 < n && already; ++i)
            if (raw.H(i, i) < raw.H(i + 1, i + 1) - 1e-12 * h_scale) already = false;

        Matrix q, q_inv;
        if (already) {
            q = Matrix::Identity(n, n);
            q_inv = q;
        } else {
            const FrameResult frame =
                build_adapting_conjugator(raw.H, /*hyp_is_log=*/true, raw.E, 1e-7);
            q = frame.q;
            q_inv = q.inverse();
        }

        AdditiveParts ad;
        Matrix h_log = q * raw.H * q_inv;
        ad.H = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) ad.H(i, i) = h_log(i, i);
        ad.H -= (ad.H.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);

        Matrix e_gen = q * raw.E * q_inv;
        const double skew_defect = max_norm(e_gen + e_gen.transpose());
        if (skew_defect > 1e-7)
            throw FrameAdaptationFailed("make_flow: elliptic generator skew defect " +
                                        std::to_string(skew_defect));
        ad.E = 0.5 * (e_gen - e_gen.transpose());

        const Matrix x_ad = q * generator * q_inv;
        ad.N = x_ad - ad.E - ad.H;

        flow.additive = ad;
        flow.triple.H = ad.H;
        flow.triple.h = linalg::expm(ad.H);
        flow.triple.e = linalg::expm(ad.E);
        flow.triple.u = expm_nilpotent(ad.N, 1.0);
        flow.triple.q = q;
        flow.triple.adapted = true;
        flow.nilpotent_log_ = ad.N;
    }

    flow.adapted_generator = (mode == TimeMode::discrete)
                                 ? Matrix(flow.triple.e * flow.triple.h * flow.triple.u)
                                 : Matrix(flow.additive->E + flow.additive->H + flow.additive->N);
    flow.cg = component_sign(flow.triple.e * flow.triple.h * flow.triple.u, flow.triple.H, tol);

    bool h_zero = true;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(flow.triple.H(i, i)) > 1e-9) h_zero = false;
    if (!h_zero) flow.mu = structure::mu(flow.triple.H);
    return flow;
}

}  // namespace kflow::jordan
