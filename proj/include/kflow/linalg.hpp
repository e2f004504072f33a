#pragma once

#include "kflow/types.hpp"

#include <complex>
#include <random>
#include <vector>

namespace kflow::linalg {

// Iwasawa factors of g in SL(n,R): g = k a n with k in SO(n), a positive
// diagonal, n unit upper triangular. Columns of g are orthogonalized with a
// re-orthogonalizing modified Gram-Schmidt pass, so k satisfies the
// CompactPoint tolerance and the a-diagonal is strictly positive.
struct IwasawaFactors {
    Matrix k;
    Matrix a;
    Matrix n;
};

enum class DetCheck { on, off };

// Factor g = k a n. Throws NonUnimodular when |det g - 1| > eps_det (check on)
// and NumericalBreakdown when a Gram-Schmidt pivot falls below 1e-14.
IwasawaFactors iwasawa_project(const Matrix& g, const TolerancePolicy& tol = {},
                               DetCheck check = DetCheck::on);

// Matrix exponential (scaling-and-squaring); exp(0) = I exactly.
Matrix expm(const Matrix& x);

// Integer matrix power, binary exponentiation; negative exponents invert.
Matrix powi(const Matrix& g, long long t);

// One eigenvalue cluster: eigenvalues within the clustering tolerance are
// merged, `value` is their mean and `basis` spans the combined generalized
// eigenspace. `eigenvector` is a genuine eigenvector for `vector_value`
// (the residual contract holds for that pair, not for the cluster mean).
struct EigCluster {
    std::complex<double> value;
    int multiplicity = 0;
    int geometric = 0;
    bool defective = false;
    Eigen::MatrixXcd basis;
    Eigen::VectorXcd eigenvector;
    std::complex<double> vector_value;
};

struct Eigendecomposition {
    std::vector<EigCluster> clusters;
    // transform = [basis_0 | basis_1 | ...]; transform^{-1} A transform is
    // block upper triangular with one block per cluster.
    Eigen::MatrixXcd transform;
    Eigen::MatrixXcd transform_inverse;
    Eigen::MatrixXcd block_triangular;

    int dim() const { return static_cast<int>(transform.rows()); }

    // Spectral projector onto the generalized eigenspace of cluster i.
    Eigen::MatrixXcd projector(int i) const;
};

// Clustered eigendecomposition via complex Schur form with reordering and
// block diagonalization. Clusters are chained at `cluster_tol`; a cluster
// whose diameter exceeds 10x the tolerance cannot be separated and raises
// IllConditioned.
Eigendecomposition eig(const Matrix& x, double cluster_tol = 1e-7);

// Real part of a complex matrix that should be real; throws IllConditioned
// if the imaginary part exceeds `imag_tol`.
Matrix real_checked(const Eigen::MatrixXcd& m, double imag_tol = 1e-9);

// Haar-ish random rotation: QR of a Gaussian matrix, determinant fixed to +1.
Matrix random_special_orthogonal(int n, std::mt19937_64& rng);

// Random element of SL(n,R) with moderate condition number.
Matrix random_unimodular(int n, std::mt19937_64& rng, double cond_cap = 50.0);

}  // namespace kflow::linalg
