#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssinv/rng.hpp"

namespace ssinv {

/// Continuous phase-type distribution: the time to absorption of a CTMC with
/// initial distribution `alpha` over `p` transient phases and subgenerator
/// `T`. Exit rates to the absorbing state are -T*1.
struct PhaseType {
    Eigen::VectorXd alpha;
    Eigen::MatrixXd T;

    int order() const { return static_cast<int>(alpha.size()); }
    Eigen::VectorXd exit_rates() const {
        return -(T * Eigen::VectorXd::Ones(T.rows()));
    }
};

inline constexpr int kMaxPhOrder = 500;

/// Empty when the distribution satisfies all structural constraints
/// (stochastic alpha, valid subgenerator, certain absorption), otherwise a
/// description of the first violated one.
std::optional<std::string> validate(const PhaseType& ph);

struct MomentVector {
    std::vector<double> m;  // m[k-1] = E[X^k]
};

struct ShapeStats {
    double mean = 0;
    double scv = 0;       // variance / mean^2
    double skewness = 0;
    double kurtosis = 0;  // non-excess, E[(X-m)^4]/sigma^4
};

/// First n raw moments via m^k = k! * alpha' (-T)^{-k} 1, computed as k
/// successive linear solves on one factorization (sparse LU above order 32,
/// partial-pivot dense LU otherwise). Warns on stderr when the infinity-norm
/// condition number of -T exceeds 1e12.
MomentVector ph_moments(const PhaseType& ph, int n);

ShapeStats ph_stats(const PhaseType& ph);

/// Scales time so the mean becomes target_mean: T <- T * (mean / target).
/// SCV, skewness and kurtosis are invariant under this map.
PhaseType rescale_to_mean(const PhaseType& ph, double target_mean);

enum class PhFamily : int {
    kExponential = 0,
    kErlang = 1,
    kHyperexponential = 2,
    kCoxian = 3,
    kErlangMixture = 4,
    kDenseRandom = 5,
};
inline constexpr int kNumPhFamilies = 6;

/// Structure mix for random PH generation. Weights need not be normalized;
/// families whose minimum order exceeds max_order are dropped from the mix.
struct PhGenConfig {
    int max_order = kMaxPhOrder;
    std::array<double, kNumPhFamilies> weights{1, 1, 1, 1, 1, 1};
};

/// Draws a random PH from the configured family mixture. Draws with
/// SCV < 1e-4 or mean outside [1e-6, 1e6] are rejected and redrawn.
/// Throws std::invalid_argument on an unsatisfiable config.
PhaseType sample_ph(const PhGenConfig& cfg, Rng& rng);

/// Precomputed jump tables for repeated variate draws: per-phase total rate,
/// exit probability and cumulative jump targets (compressed to nonzeros).
class PhSampler {
public:
    explicit PhSampler(const PhaseType& ph);

    /// Plays the absorbing chain: initial phase from alpha, exponential
    /// sojourns, jumps by the T-row probabilities, until absorption.
    /// Deterministic outcomes (single possible phase or forced exit) consume
    /// no uniforms, so an order-1 PH costs exactly one draw: -ln(u)/rate.
    double draw(Rng& rng) const;

private:
    struct Phase {
        double rate = 0;                       // -T_ii
        std::vector<double> cum_prob;          // cumulative, last entry 1.0
        std::vector<int> target;               // parallel to cum_prob; -1 = exit
    };
    std::vector<double> init_cum_;
    std::vector<Phase> phases_;
    int order_ = 0;
};

/// One-off draw; builds the jump tables each call. Hot loops should hold a
/// PhSampler instead.
double draw_variate(const PhaseType& ph, Rng& rng);

/// {"alpha":[...],"T":[[...]]}, row-major T, 17-significant-digit floats.
std::string ph_to_json(const PhaseType& ph);
void append_ph_json(std::string& out, const PhaseType& ph);
PhaseType ph_from_json(const std::string& text);

}  // namespace ssinv
