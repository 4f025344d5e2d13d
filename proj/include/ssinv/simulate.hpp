#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssinv/phase_type.hpp"

namespace ssinv {

/// A continuous-review lost-sales (s,S) system: unit demands with PH
/// interarrival D, order-up-to-S replenishment after a PH lead time L.
struct SystemInstance {
    int s = 0;
    int S = 1;
    PhaseType D;
    PhaseType L;
    double rho = 0;  // m_L^1 / m_D^1
};

inline constexpr int kPmfPad = 31;  // S_max = 30 -> levels 0..30

struct LabelDiagnostics {
    std::uint64_t arrivals = 0;
    std::uint64_t replenishments = 0;
    double warmup_frac = 0;
    std::uint64_t seed = 0;
};

/// Ground-truth stationary measures. P is padded to at least kPmfPad
/// entries; indices above S are exactly zero.
struct Labels {
    std::vector<double> P;
    double EC = 0;
    double pi0 = 0;
    std::vector<double> pi_arrival;  // level seen by an arriving demand
    LabelDiagnostics diag;
};

struct SimConfig {
    std::uint64_t n_arrivals = 1'000'000;
    double warmup_frac = 0.1;  // arrivals discarded before statistics
    std::uint64_t seed = 1;
};

/// Discrete-event simulation over cfg.n_arrivals demands. Inventory starts
/// at S; a demand that drops the level to <= s places an order when none is
/// outstanding; a replenishment sets the level back to S (ties between a
/// demand and an arriving order resolve order-first). P is the time-weighted
/// occupancy after warm-up, pi0 the post-warm-up fraction of demands that
/// found zero inventory, EC the mean inter-replenishment gap with both ends
/// after warm-up. Throws std::runtime_error when no full post-warm-up cycle
/// exists to estimate EC from.
Labels simulate_system(const SystemInstance& inst, const SimConfig& cfg);

/// Exact stationary measures for exponential demand (rate lambda) and lead
/// time (rate mu) via the (level, order-outstanding) CTMC; requires s < S.
/// pi0 = P(level 0) by PASTA; EC = 1 / (mu * P(order outstanding)).
Labels ctmc_oracle(int s, int S, double lambda, double mu);

/// Degenerate instant-replenishment limit: P uniform over {s+1..S},
/// EC = (S - s) * m_D1, pi0 = 0.
Labels zero_lead_oracle(int s, int S, double m_D1);

struct ReplicationMeasure {
    double mean = 0;
    double ci_length = 0;  // 95%, 2 * 1.96 * sd / sqrt(runs)
};

struct ReplicationResult {
    ReplicationMeasure mean_inventory;
    ReplicationMeasure cycle_time;
    ReplicationMeasure pi0;
    int runs = 0;
};

/// Expected inventory level of a PMF.
double pmf_mean(std::span<const double> P);

/// Independent replications with per-run seeds; normal-approximation CIs
/// across runs.
ReplicationResult replication_ci_seeded(const SystemInstance& inst, const SimConfig& cfg,
                                        std::span<const std::uint64_t> run_seeds);

/// Convenience: run seeds derived as substreams of cfg.seed.
ReplicationResult replication_ci(const SystemInstance& inst, const SimConfig& cfg, int runs);

}  // namespace ssinv
