#include "kflow/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <numeric>

namespace kflow::linalg {

namespace {

constexpr double kPivotFloor = 1e-14;

}  // namespace

IwasawaFactors iwasawa_project(const Matrix& g, const TolerancePolicy& tol, DetCheck check) {
    const auto n = g.rows();
    if (n != g.cols() || n < 2 || n > 8)
        throw std::invalid_argument("iwasawa_project: expected square matrix with 2 <= n <= 8");
    if (!is_finite(g)) throw std::invalid_argument("iwasawa_project: non-finite entries");
    if (check == DetCheck::on) {
        const double det = g.determinant();
        if (std::abs(det - 1.0) > tol.eps_det)
            throw NonUnimodular("iwasawa_project: |det - 1| = " + std::to_string(std::abs(det - 1.0)));
    }

    // Modified Gram-Schmidt with a second re-orthogonalization sweep. The
    // second sweep keeps Q orthogonal to machine precision well beyond the
    // point where a single MGS pass degrades.
    Matrix q = g;
    Matrix r = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double proj = q.col(i).dot(q.col(j));
                q.col(j) -= proj * q.col(i);
                r(i, j) += proj;
            }
        }
        const double pivot = q.col(j).norm();
        if (pivot < kPivotFloor)
            throw NumericalBreakdown("iwasawa_project: Gram-Schmidt pivot " + std::to_string(pivot));
        r(j, j) = pivot;
        q.col(j) /= pivot;
    }

    IwasawaFactors out;
    out.k = std::move(q);
    out.a = Matrix(r.diagonal().asDiagonal());
    out.n = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) out.n(i, j) = r(i, j) / r(i, i);
    return out;
}

Matrix expm(const Matrix& x) {
    if (!is_finite(x)) throw std::invalid_argument("expm: non-finite entries");
    if (x.isZero(0.0)) return Matrix::Identity(x.rows(), x.cols());
    return x.exp();
}

Matrix powi(const Matrix& g, long long t) {
    const auto n = g.rows();
    if (t == 0) return Matrix::Identity(n, n);
    Matrix base = t > 0 ? g : Matrix(g.inverse());
    unsigned long long e = t > 0 ? static_cast<unsigned long long>(t)
                                 : static_cast<unsigned long long>(-t);
    Matrix acc = Matrix::Identity(n, n);
    while (e > 0) {
        if (e & 1ull) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

namespace {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Swap adjacent diagonal entries (k, k+1) of the upper-triangular T by a
// unitary similarity, accumulating into Q. Standard Givens-based exchange.
void schur_swap(CMat& t, CMat& q, Eigen::Index k) {
    const Complex a = t(k, k);
    const Complex b = t(k, k + 1);
    const Complex d = t(k + 1, k + 1);
    const Complex v0 = b;
    const Complex v1 = d - a;
    const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
    if (nrm == 0.0) return;  // equal eigenvalues, nothing to move
    const Complex c = v0 / nrm;
    const Complex s = v1 / nrm;
    CMat giv(2, 2);
    giv << c, -std::conj(s), s, std::conj(c);
    t.block(k, 0, 2, t.cols()) = giv.adjoint() * t.block(k, 0, 2, t.cols());
    t.block(0, k, t.rows(), 2) = t.block(0, k, t.rows(), 2) * giv;
    q.block(0, k, q.rows(), 2) = q.block(0, k, q.rows(), 2) * giv;
    t(k + 1, k) = 0.0;
}

// Solve R T22 - T11 R = T12 for R, with T11 (p x p) and T22 (q x q) upper
// triangular and spectra disjoint. Column-wise back substitution.
CMat sylvester_triangular(const CMat& t11, const CMat& t12, const CMat& t22) {
    const Eigen::Index p = t11.rows(), q = t22.rows();
    CMat r = CMat::Zero(p, q);
    for (Eigen::Index j = 0; j < q; ++j) {
        CVec rhs = t12.col(j);
        for (Eigen::Index i = 0; i < j; ++i) rhs -= r.col(i) * t22(i, j);
        // (T22(j,j) I - T11) r_j = rhs, upper triangular solve
        for (Eigen::Index row = p - 1; row >= 0; --row) {
            Complex acc = rhs(row);
            for (Eigen::Index col = row + 1; col < p; ++col) acc -= t11(row, col) * r(col, j);
            const Complex diag = t22(j, j) - t11(row, row);
            if (std::abs(diag) < 1e-300)
                throw IllConditioned("eig: coincident cluster values in Sylvester solve");
            r(row, j) = acc / diag;
        }
    }
    return r;
}

}  // namespace

Eigen::MatrixXcd Eigendecomposition::projector(int i) const {
    const int n = dim();
    Eigen::Index off = 0;
    for (int c = 0; c < i; ++c) off += clusters[c].multiplicity;
    const Eigen::Index m = clusters[i].multiplicity;
    CMat sel = CMat::Zero(n, n);
    for (Eigen::Index j = 0; j < m; ++j) sel(off + j, off + j) = 1.0;
    return transform * sel * transform_inverse;
}

namespace {

// One clustering attempt at a fixed tolerance; fills the decomposition.
Eigendecomposition eig_attempt(const CMat& t_in, const CMat& q_in, double cluster_tol) {
    const auto n = t_in.rows();
    CMat t = t_in;
    CMat q = q_in;

    // Chain eigenvalues into clusters at the tolerance.
    std::vector<Complex> values(n);
    for (Eigen::Index i = 0; i < n; ++i) values[i] = t(i, i);
    std::vector<int> cluster_of(n, -1);
    int num_clusters = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cluster_of[i] >= 0) continue;
        const int id = num_clusters++;
        std::vector<Eigen::Index> stack{i};
        cluster_of[i] = id;
        while (!stack.empty()) {
            const Eigen::Index a = stack.back();
            stack.pop_back();
            for (Eigen::Index b = 0; b < n; ++b) {
                if (cluster_of[b] < 0 && std::abs(values[a] - values[b]) <= cluster_tol) {
                    cluster_of[b] = id;
                    stack.push_back(b);
                }
            }
        }
    }

    // A cluster that chained together but spreads much wider than the
    // tolerance cannot be trusted: separation is ambiguous.
    std::vector<std::vector<Eigen::Index>> members(num_clusters);
    for (Eigen::Index i = 0; i < n; ++i) members[cluster_of[i]].push_back(i);
    for (const auto& m : members) {
        double diam = 0;
        for (size_t a = 0; a < m.size(); ++a)
            for (size_t b = a + 1; b < m.size(); ++b)
                diam = std::max(diam, std::abs(values[m[a]] - values[m[b]]));
        if (diam > 4.0 * cluster_tol)
            throw IllConditioned("eig: cluster diameter " + std::to_string(diam) +
                                 " exceeds separation tolerance");
    }

    // Deterministic cluster order: descending real part, then descending
    // imaginary part of the cluster mean.
    std::vector<Complex> means(num_clusters, 0.0);
    for (int c = 0; c < num_clusters; ++c) {
        for (auto i : members[c]) means[c] += values[i];
        means[c] /= static_cast<double>(members[c].size());
    }
    std::vector<int> order(num_clusters);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (means[a].real() != means[b].real()) return means[a].real() > means[b].real();
        return means[a].imag() > means[b].imag();
    });
    std::vector<int> rank(num_clusters);
    for (int i = 0; i < num_clusters; ++i) rank[order[i]] = i;

    // Bubble the Schur form until cluster members are contiguous and ordered.
    std::vector<int> pos_rank(n);
    for (Eigen::Index i = 0; i < n; ++i) pos_rank[i] = rank[cluster_of[i]];
    bool moved = true;
    while (moved) {
        moved = false;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (pos_rank[i] > pos_rank[i + 1]) {
                schur_swap(t, q, i);
                std::swap(pos_rank[i], pos_rank[i + 1]);
                moved = true;
            }
        }
    }

    // Block-diagonalize: peel one cluster at a time with a Sylvester solve.
    std::vector<int> sizes(num_clusters);
    for (int c = 0; c < num_clusters; ++c) sizes[rank[c]] = static_cast<int>(members[c].size());
    CMat z = CMat::Identity(n, n);
    CMat z_inv = CMat::Identity(n, n);
    Eigen::Index off = 0;
    for (int c = 0; c + 1 < num_clusters; ++c) {
        const Eigen::Index m = sizes[c];
        const Eigen::Index rest = n - off - m;
        const CMat t11 = t.block(off, off, m, m);
        const CMat t12 = t.block(off, off + m, m, rest);
        const CMat t22 = t.block(off + m, off + m, rest, rest);
        const CMat r = sylvester_triangular(t11, t12, t22);
        // [[I, R],[0, I]] conjugation clears the off-diagonal block.
        t.block(off, off + m, m, rest).setZero();
        CMat step = CMat::Identity(n, n);
        step.block(off, off + m, m, rest) = r;
        CMat step_inv = CMat::Identity(n, n);
        step_inv.block(off, off + m, m, rest) = -r;
        z = z * step;
        z_inv = step_inv * z_inv;
        off += m;
    }

    Eigendecomposition out;
    out.transform = q * z;
    out.transform_inverse = z_inv * q.adjoint();
    out.block_triangular = t;

    off = 0;
    for (int c = 0; c < num_clusters; ++c) {
        const Eigen::Index m = sizes[c];
        EigCluster cl;
        cl.multiplicity = static_cast<int>(m);
        Complex mean = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) mean += t(off + j, off + j);
        cl.value = mean / static_cast<double>(m);
        cl.basis = out.transform.block(0, off, n, m);
        // First column of the block is a true eigenvector for its own
        // triangular diagonal entry.
        cl.vector_value = t(off, off);
        cl.eigenvector = cl.basis.col(0).normalized();
        const CMat shifted = t.block(off, off, m, m) - cl.value * CMat::Identity(m, m);
        Eigen::JacobiSVD<CMat> svd(shifted);
        const double scale = std::max(1.0, std::abs(cl.value));
        int rk = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (svd.singularValues()(j) > 1e-8 * scale) ++rk;
        cl.geometric = static_cast<int>(m) - rk;
        cl.defective = cl.geometric < cl.multiplicity;
        out.clusters.push_back(std::move(cl));
        off += m;
    }
    return out;
}

}  // namespace

Eigendecomposition eig(const Matrix& x, double cluster_tol) {
    const auto n = x.rows();
    if (n != x.cols()) throw std::invalid_argument("eig: expected square matrix");
    if (!is_finite(x)) throw std::invalid_argument("eig: non-finite entries");

    Eigen::ComplexSchur<CMat> schur(x.cast<Complex>(), /*computeU=*/true);
    if (schur.info() != Eigen::Success) throw IllConditioned("eig: Schur iteration failed");

    // A numerically split multiple eigenvalue leaves nearly parallel columns
    // in the eigenbasis; that conditioning, not the eigenvalue spacing, is
    // the reliable defectiveness signal. Escalate the clustering tolerance
    // until the transform is well conditioned.
    Eigendecomposition result;
    bool have_result = false;
    const double cap = std::max(1.1e-3, cluster_tol);
    for (double t = cluster_tol; t <= cap; t *= 32.0) {
        result = eig_attempt(schur.matrixT(), schur.matrixU(), t);
        Eigen::JacobiSVD<CMat> svd(result.transform);
        const double cond =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (cond <= 1e4) {
            have_result = true;
            break;
        }
    }
    if (!have_result)
        throw IllConditioned("eig: eigenbasis remains ill conditioned at the tolerance cap");
    return result;
}

Matrix real_checked(const Eigen::MatrixXcd& m, double imag_tol) {
    const double imag = m.imag().cwiseAbs().maxCoeff();
    if (imag > imag_tol)
        throw IllConditioned("real_checked: imaginary residue " + std::to_string(imag));
    return m.real();
}

Matrix random_special_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

Matrix random_unimodular(int n, std::mt19937_64& rng, double cond_cap) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int attempt = 0; attempt < 256; ++attempt) {
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = unit(rng);
        Eigen::JacobiSVD<Matrix> svd(a);
        const double smin = svd.singularValues()(n - 1);
        if (smin < 1e-3) continue;
        if (svd.singularValues()(0) / smin > cond_cap) continue;
        double det = a.determinant();
        if (det < 0) {
            a.col(0) *= -1.0;
            det = -det;
        }
        a /= std::pow(det, 1.0 / n);
        return a;
    }
    throw NumericalBreakdown("random_unimodular: rejection sampling exhausted");
}

}  // namespace kflow::linalg
