#pragma once

#include "kflow/linalg.hpp"
#include "kflow/structure.hpp"
#include "kflow/types.hpp"

#include <optional>

namespace kflow::jordan {

// Commuting factors g = e h u: elliptic (unit-modulus spectrum, semisimple),
// hyperbolic (positive spectrum, h = exp(H)) and unipotent. Once adapted,
// H is diagonal nonincreasing (closed positive chamber), e is orthogonal and
// q carries the change of frame: adapted parts = q (original parts) q^{-1}.
struct JordanTriple {
    Matrix e;
    Matrix h;
    Matrix u;
    Matrix H;  // log of h (diagonal after adaptation, traceless)
    Matrix q;
    bool adapted = false;

    int dim() const { return static_cast<int>(e.rows()); }
};

// Residuals of the triple invariants; tests and the verifier pin these.
struct TripleResiduals {
    double commutation;    // max pairwise commutator, max-norm
    double product;        // ||e h u - g||, max-norm (g = reference product)
    double unipotent;      // ||(u - I)^n||, max-norm
    double elliptic_orth;  // ||e^T e - I||, max-norm (adapted frames only)
};

TripleResiduals triple_residuals(const JordanTriple& t, const Matrix& reference);

// Multiplicative Jordan decomposition via the clustered eigendecomposition.
// The cluster tolerance gets a floor of 20 sqrt(eps) max(1, ||g||) so that
// defective eigenvalues, which split by O(sqrt(eps)) under conjugation, are
// still merged. Factors are returned in the input frame (adapted = false
// unless the input happens to be in adapted position already).
JordanTriple jordan_multiplicative(const Matrix& g, const TolerancePolicy& tol = {},
                                   double cluster_tol = 1e-7);

// Additive counterpart: X = E + H + N pairwise commuting, E semisimple with
// imaginary spectrum, H semisimple real, N nilpotent.
struct AdditiveParts {
    Matrix E;
    Matrix H;
    Matrix N;
};

AdditiveParts jordan_additive(const Matrix& x, double cluster_tol = 1e-7);

// Conjugate the triple so that h = exp(H) with H diagonal nonincreasing and
// e orthogonal (blockwise canonical form inside the level sets of H).
// Throws FrameAdaptationFailed when the elliptic factor cannot be
// orthogonalized below 1e-7.
JordanTriple adapt_frame(const JordanTriple& triple, const TolerancePolicy& tol = {});

// For g commuting with the diagonal H: the diagonal-sign element c_g of C
// with g c_g^{-1} in the identity component of the centralizer. Each level
// block contributes sign(det block) on its first diagonal slot.
structure::SignedPermutation component_sign(const Matrix& g, const Matrix& H,
                                            const TolerancePolicy& tol = {});

enum class TimeMode { discrete, continuous };

// A translation flow together with its adapted Jordan data. All dynamics run
// in the adapted frame; q lets callers pull results back.
struct FlowSpec {
    TimeMode mode = TimeMode::discrete;
    Matrix generator;  // original frame: group element (discrete) or traceless X
    JordanTriple triple;                    // adapted
    std::optional<AdditiveParts> additive;  // adapted frame, continuous mode only
    Matrix adapted_generator;  // e h u (discrete) or E + H + N (continuous)
    structure::SignedPermutation cg;
    std::optional<double> mu;  // empty when H = 0
    TolerancePolicy tol;

    int dim() const { return static_cast<int>(generator.rows()); }
    const Matrix& chamber_element() const { return triple.H; }

    // Flow matrices at time t (integer t enforced in discrete mode).
    Matrix element_at(double t) const;
    Matrix hyperbolic_at(double t) const;
    Matrix elliptic_at(double t) const;
    Matrix unipotent_at(double t) const;

    // Nilpotent generator of the unipotent part (log u).
    const Matrix& unipotent_log() const { return nilpotent_log_; }

    Matrix nilpotent_log_;  // cached by make_flow
};

FlowSpec make_flow(TimeMode mode, const Matrix& generator, const TolerancePolicy& tol = {});

// Finite series log of a unipotent matrix.
Matrix nilpotent_log(const Matrix& u);

// exp(t N) for nilpotent N by the terminating series.
Matrix expm_nilpotent(const Matrix& n_mat, double t);

}  // namespace kflow::jordan
