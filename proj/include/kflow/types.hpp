#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace kflow {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

// Global tolerance policy. A single instance is threaded through the public
// entry points; the defaults are what the test suites pin against.
struct TolerancePolicy {
    double eps_det = 1e-9;    // |det - 1| bound for group elements
    double eps_orth = 1e-10;  // max-norm bound on k^T k - I for compact points
    double eps_fix = 1e-8;    // fixed-point / membership tests
    double eps_grad = 1e-5;   // gradient residuals
    double eps_recon = 1e-12; // factorization reconstruction (max-norm)
    double delta_fd = 1e-5;   // finite-difference step

    void validate() const {
        if (!(eps_det > 0 && eps_orth > 0 && eps_fix > 0 && eps_grad > 0 &&
              eps_recon > 0 && delta_fd > 0))
            throw std::invalid_argument("TolerancePolicy: all tolerances must be positive");
        if (!(eps_recon < eps_orth && eps_orth < eps_fix))
            throw std::invalid_argument("TolerancePolicy: need eps_recon < eps_orth < eps_fix");
    }
};

struct KflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonUnimodular : KflowError { using KflowError::KflowError; };
struct NumericalBreakdown : KflowError { using KflowError::KflowError; };
struct IllConditioned : KflowError { using KflowError::KflowError; };
struct ZeroElement : KflowError { using KflowError::KflowError; };
struct NotInCentralizer : KflowError { using KflowError::KflowError; };
struct FrameAdaptationFailed : KflowError { using KflowError::KflowError; };
struct SearchExhausted : KflowError { using KflowError::KflowError; };
struct NotOnComponent : KflowError { using KflowError::KflowError; };
struct BoundViolated : KflowError { using KflowError::KflowError; };
struct DisagreementBug : KflowError { using KflowError::KflowError; };

inline double max_norm(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_finite(const Matrix& m) { return m.allFinite(); }

// Ambient group element: real n x n with det 1, 2 <= n <= 8.
class GroupElement {
public:
    explicit GroupElement(Matrix g, const TolerancePolicy& tol = {}) : g_(std::move(g)) {
        check(g_, tol);
    }

    const Matrix& mat() const { return g_; }
    int dim() const { return static_cast<int>(g_.rows()); }

    static void check(const Matrix& g, const TolerancePolicy& tol = {}) {
        if (g.rows() != g.cols() || g.rows() < 2 || g.rows() > 8)
            throw std::invalid_argument("GroupElement: expected square matrix with 2 <= n <= 8");
        if (!is_finite(g)) throw std::invalid_argument("GroupElement: non-finite entries");
        const double det = g.determinant();
        if (std::abs(det - 1.0) > tol.eps_det)
            throw NonUnimodular("GroupElement: |det - 1| = " + std::to_string(std::abs(det - 1.0)));
    }

private:
    Matrix g_;
};

// Point of K = SO(n), standing for the coset kb in G/AN.
class CompactPoint {
public:
    explicit CompactPoint(Matrix k, const TolerancePolicy& tol = {}) : k_(std::move(k)) {
        check(k_, tol);
    }

    const Matrix& mat() const { return k_; }
    int dim() const { return static_cast<int>(k_.rows()); }

    static void check(const Matrix& k, const TolerancePolicy& tol = {}) {
        if (k.rows() != k.cols() || k.rows() < 2 || k.rows() > 8)
            throw std::invalid_argument("CompactPoint: expected square matrix with 2 <= n <= 8");
        if (!is_finite(k)) throw std::invalid_argument("CompactPoint: non-finite entries");
        const Matrix defect = k.transpose() * k - Matrix::Identity(k.rows(), k.cols());
        if (max_norm(defect) > tol.eps_orth)
            throw std::invalid_argument("CompactPoint: not orthogonal at tolerance, defect = " +
                                        std::to_string(max_norm(defect)));
        if (k.determinant() <= 0.0)
            throw std::invalid_argument("CompactPoint: determinant must be positive");
    }

    static CompactPoint identity(int n) { return CompactPoint(Matrix::Identity(n, n)); }

private:
    Matrix k_;
};

// Frobenius distance; bi-invariant on SO(n).
inline double distance(const CompactPoint& a, const CompactPoint& b) {
    return (a.mat() - b.mat()).norm();
}

inline double distance(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

}  // namespace kflow
