#pragma once

#include "kflow/jordan.hpp"
#include "kflow/linalg.hpp"
#include "kflow/types.hpp"

#include <optional>
#include <vector>

namespace kflow::flow {

// The action (g, k) -> kappa(g k) of G on K = G/AN.
CompactPoint act(const Matrix& g, const CompactPoint& k, const TolerancePolicy& tol = {},
                 linalg::DetCheck check = linalg::DetCheck::on);

// Flow map at time t applied to k. Evaluates kappa(e^t h^t u^t k) by exact
// semigroup splitting so that large times neither overflow nor drift.
CompactPoint act_time(const jordan::FlowSpec& flow, double t, const CompactPoint& k);

struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> samples;
};

// Orbit samples at 0, step, 2 step, ... up to horizon. Discrete flows step by
// one iterate; continuous flows default to step 0.1. Consecutive samples obey
// k_{i+1} = kappa(g^step k_i).
Trajectory trajectory(const jordan::FlowSpec& flow, const CompactPoint& k0, double horizon,
                      double step = 0.1);

enum class Direction { forward, backward };

struct OmegaLimit {
    CompactPoint limit;     // cluster center projected onto the nearest fixed component
    double projection_gap;  // distance from the raw center to the projection
    double time_reached;
};

// Detects pointwise stabilization: 10 consecutive steps within stab_tol ends
// the run; the averaged tail is projected onto the nearest component of
// fix(h^t). Returns nullopt (not converged) when max_time is exhausted,
// which is the expected outcome on non-attracting invariant sets.
std::optional<OmegaLimit> omega_limit(const jordan::FlowSpec& flow, const CompactPoint& k0,
                                      double stab_tol, double max_time,
                                      Direction dir = Direction::forward);

// Nearest point of the fixed set K_H^0 U b to an arbitrary matrix, by block
// polar projection over every coset; returns the point and the gap.
std::pair<CompactPoint, double> project_to_fixed_set(const Matrix& center, const Matrix& H);

// act(u, k) = k at the fixed-point tolerance. For unipotent u this pointwise
// test captures genuine fixedness.
bool is_fixed_unipotent(const Matrix& u, const CompactPoint& k, const TolerancePolicy& tol = {});

// Recurrence test: k fixed by both the hyperbolic and the unipotent part.
bool is_recurrent(const jordan::FlowSpec& flow, const CompactPoint& k);

// Limit of kappa(u^t k) as t -> +-infinity, located by time doubling until
// the probes are Cauchy within limit_tol.
CompactPoint unipotent_limit(const jordan::FlowSpec& flow, const CompactPoint& k, Direction dir,
                             double limit_tol);

struct Chain {
    std::vector<Matrix> points;
    std::vector<double> times;
    double epsilon = 0.0;
    double min_time = 0.0;
};

// Explicit (epsilon, T)-chain from k back to itself for k in fix(h^t),
// following the alternating construction: find s > T with e^s near the
// identity and the unipotent orbit near its forward/backward limits, read
// off m in M from the two limits, and walk k -> k m -> ... -> k m^p = k.
Chain build_chain(const jordan::FlowSpec& flow, const CompactPoint& k, double epsilon,
                  double min_time);

// Replays the stored samples: every jump below epsilon, every time >= T.
bool verify_chain(const Chain& chain, const jordan::FlowSpec& flow);

}  // namespace kflow::flow
