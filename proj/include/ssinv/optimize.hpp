#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssinv/mlp.hpp"
#include "ssinv/simulate.hpp"

namespace ssinv {

/// Cost-rate parameters. m_D1 is the mean interarrival time in the user's
/// time units (the measures backend works on the mean-1 normalized system).
struct CostSpec {
    double K_o = 0;   // fixed cost per replenishment
    double c_r = 0;   // per purchased unit
    double c_h = 0;   // holding, per unit per time
    double c_l = 0;   // per lost unit
    double m_D1 = 1;
};

/// Threshold service level: P(I >= level) >= min_prob.
struct Constraint {
    int level = 0;
    double min_prob = 0;
};

/// Long-run cost rate
///   g = c_h E[I] + K_o / E[C] + c_r (1 - pi0)/m_D1 + c_l pi0/m_D1,
/// with E[I] the mean of P and EC in user time units.
double cost_g(std::span<const double> P, double EC, double pi0, const CostSpec& spec);

bool constraint_check(std::span<const double> P, const Constraint& constraint);

struct GridEntry {
    int s = 0;
    int S = 0;
    double g = 0;
    bool feasible = true;
};

struct GridResult {
    std::vector<GridEntry> table;                 // all (s,S), 0 <= s < S <= S_max
    std::optional<GridEntry> best_unconstrained;  // ties -> smaller S, then smaller s
    std::optional<GridEntry> best_constrained;    // absent when nothing is feasible
    double wall_ms = 0;
};

/// Stationary measures for a batch of (s,S) pairs on the normalized
/// (mean-interarrival 1) system; EC in normalized units.
using MeasureBackend =
    std::function<std::vector<Labels>(const std::vector<std::pair<int, int>>&)>;

/// Evaluates every pair 0 <= s < S <= S_max through the backend and Eq-style
/// cost above (predicted EC is scaled back by m_D1 before costing).
GridResult grid_optimize(const MeasureBackend& backend, const CostSpec& spec,
                         const std::optional<Constraint>& constraint, int S_max);

/// Backend adapters.
MeasureBackend nn_backend(const ModelBundle& bundle, std::span<const double> mom_D,
                          std::span<const double> mom_L);
/// Exact CTMC; demand and lead treated as exponential with the given
/// normalized rates (demand rate 1 for mean-1 systems).
MeasureBackend mm_backend(double lambda, double mu);
/// Simulation per pair (parallel across pairs).
MeasureBackend sim_backend(const PhaseType& D, const PhaseType& L, const SimConfig& cfg,
                           int workers);

std::string grid_csv(const GridResult& result);
std::string grid_summary_json(const GridResult& result);

}  // namespace ssinv
