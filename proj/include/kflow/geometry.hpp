#pragma once

#include "kflow/jordan.hpp"
#include "kflow/types.hpp"

#include <vector>

namespace kflow::geometry {

// Data of the Borel-type metric: a regular chamber element H_r grading the
// tangent space and the weight c_0 on the centralizer part (inert here, the
// centralizer subalgebra m vanishes for sl(n,R); kept for API fidelity).
struct MetricSpec {
    Matrix H_r;
    double c0 = 1.0;

    static MetricSpec standard(int n);  // H_r = diag(n-1, n-3, ..., -(n-1))
    void validate() const;              // strictly decreasing diagonal
};

// Height function f_H(kb) = <Ad(k) H_r, H>.
double height(const CompactPoint& k, const Matrix& H, const MetricSpec& spec);

// Matrix realization of the tangent vector Y . (kb): k (L - L^T) with L the
// strictly lower part of Ad(k^{-1}) Y.
Matrix realize_tangent(const Matrix& y, const CompactPoint& k);

// The vector field of the hyperbolic flow at k, realized in T_k SO(n).
Matrix induced_field(const Matrix& H, const CompactPoint& k);

// Forward finite-difference version (kappa(exp(delta H) k) - k) / delta,
// the independent cross-check of induced_field.
Matrix induced_field_fd(const Matrix& H, const CompactPoint& k, double delta);

// Inner product on n^- computed twice: as the graded eigenspace sum with
// weights c_lambda = -2 lambda, and via the bracket form 2 <[X, H_r], Y>.
// The two routes must agree to 1e-10 (DisagreementBug otherwise).
double borel_metric(const Matrix& x, const Matrix& y, const MetricSpec& spec);

// Norm of (B-gradient of f_H at k) - (induced field at k); the gradient is
// recovered from finite-difference directional derivatives through the
// metric Gram system.
double gradient_residual(const Matrix& H, const MetricSpec& spec, const CompactPoint& k,
                         const TolerancePolicy& tol = {});

// f_H is nondecreasing along the hyperbolic flow from k0 (slack 1e-10).
bool monotonicity_check(const Matrix& H, const MetricSpec& spec, const CompactPoint& k0,
                        double horizon, const TolerancePolicy& tol = {});

// Orthogonal splitting T_x K = TM + V^- + V^+ over a point of a Morse
// component: each summand is the intersection of the corresponding
// subalgebra with the orthocomplement of the isotropy at x.
struct TangentSplitting {
    CompactPoint base;
    std::vector<Matrix> alg_tm, alg_v_minus, alg_v_plus;  // Lie algebra elements
    std::vector<Matrix> tan_tm, tan_v_minus, tan_v_plus;  // realized tangents
};

TangentSplitting tangent_splitting(const CompactPoint& x, const Matrix& H,
                                   const jordan::FlowSpec& flow);

// Fitted exponential rates of Ad(g^t) on the splitting over t in [0, T]:
// lambda_minus: largest fitted slope of log ||Ad(g^t) Y|| on V^- (expected
// <= -mu/2); lambda_plus: smallest fitted backward decay rate on V^+
// (expected >= mu/2); nu: largest absolute tangential slope (expected
// <= mu/4); c: envelope constant over the tested window. The fit window
// starts at t = 2 so polynomial transients are dominated.
struct RateEstimates {
    double lambda_minus;
    double lambda_plus;
    double nu;
    double c;
};

// Throws BoundViolated (with the offending direction) when a fitted rate
// breaks its bound.
RateEstimates rate_estimates(const jordan::FlowSpec& flow, const TangentSplitting& splitting,
                             double horizon);

}  // namespace kflow::geometry
