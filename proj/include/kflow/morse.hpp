#pragma once

#include "kflow/flow.hpp"
#include "kflow/jordan.hpp"
#include "kflow/structure.hpp"

#include <optional>
#include <random>
#include <vector>

namespace kflow::morse {

// Which fixed component K_H^0 u b contains k, if any: k u^{-1} must be
// block diagonal over the level sets of H with special-orthogonal blocks.
std::optional<structure::CosetLabel> fixed_component_of(const CompactPoint& k, const Matrix& H,
                                                        const TolerancePolicy& tol = {});

// All components of fix(h^t), one label per right coset U_H \ U.
// Throws ZeroElement when H = 0.
std::vector<structure::CosetLabel> fixed_set(const Matrix& H);

// One minimal Morse component of the flow: a right coset of U_H^g in U with
// attractor/repeller flags, the number of connected pieces (2 when the
// time-one element leaves the identity component of its centralizer) and
// dim K_H^0.
struct MorseLabel {
    structure::CosetLabel coset;
    bool is_attractor = false;
    bool is_repeller = false;
    int component_count = 1;
    int dimension = 0;
};

std::vector<MorseLabel> morse_components(const jordan::FlowSpec& flow);

// Lift a U_H-coset (as returned by fixed_component_of) into the Morse label
// whose U_H^g-coset contains it.
std::optional<MorseLabel> lift_label(const std::vector<MorseLabel>& labels,
                                     const structure::SignedPermutation& u,
                                     const jordan::FlowSpec& flow);

struct BasinClassification {
    std::optional<MorseLabel> forward;
    std::optional<MorseLabel> backward;
    double forward_time = 0.0;
    double backward_time = 0.0;
};

// Forward/backward basin labels via omega limits; a NotConverged run is
// retried once at four times the horizon and otherwise left unset.
BasinClassification classify_basin(const jordan::FlowSpec& flow, const CompactPoint& k,
                                   double stab_tol = 1e-6, double horizon = 1e3);

// Points kappa(exp(Y) l u) with Y uniform in the n^-_H coefficient cube and
// l a random rotation of K_H^0.
std::vector<CompactPoint> stable_manifold_sample(const MorseLabel& label, int count,
                                                 const jordan::FlowSpec& flow,
                                                 std::mt19937_64& rng);

// Isolated recurrent points located per component from the in-component
// unipotent limits (two per component when the unipotent part acts
// nontrivially). With trivial unipotent part every component is recurrent
// and the coset representatives stand in; with H = 0 the candidates are the
// elements of U.
std::vector<CompactPoint> recurrent_points(const jordan::FlowSpec& flow);

}  // namespace kflow::morse
