#include "ssinv/simulate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ssinv {

namespace {

void check(bool cond, const char* what) {
    if (!cond) throw std::logic_error(std::string("simulate_system invariant violated: ") + what);
}

}  // namespace

Labels simulate_system(const SystemInstance& inst, const SimConfig& cfg) {
    if (inst.s < 0 || inst.S < 1 || inst.s > inst.S)
        throw std::invalid_argument("simulate_system: need 0 <= s <= S, S >= 1");
    if (cfg.warmup_frac < 0 || cfg.warmup_frac >= 0.5)
        throw std::invalid_argument("simulate_system: warmup_frac must be in [0, 0.5)");

    const int S = inst.S, s = inst.s;
    const PhSampler demand_gen(inst.D);
    const PhSampler lead_gen(inst.L);
    Rng rng_demand(derive_stream_seed(cfg.seed, 1));
    Rng rng_lead(derive_stream_seed(cfg.seed, 2));

    const std::uint64_t n_total = cfg.n_arrivals;
    const std::uint64_t n_warmup = static_cast<std::uint64_t>(cfg.warmup_frac * n_total);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    int level = S;
    bool outstanding = false;
    double next_demand = demand_gen.draw(rng_demand);
    double next_order = kInf;

    std::vector<double> occupancy(static_cast<std::size_t>(S) + 1, 0.0);
    std::vector<std::uint64_t> seen(static_cast<std::size_t>(S) + 1, 0);
    std::uint64_t arrivals = 0, counted_arrivals = 0, replenishments = 0;

    bool collecting = (n_warmup == 0);
    double stats_start = 0.0;
    double last_event = 0.0;
    double prev_replenish = -kInf;
    double gap_sum = 0.0;
    std::uint64_t gap_count = 0;

    // s == S replenishes straight into the reorder region.
    if (level <= s) {
        outstanding = true;
        next_order = lead_gen.draw(rng_lead);
    }

    while (arrivals < n_total) {
        const bool order_first = outstanding && next_order <= next_demand;
        const double now = order_first ? next_order : next_demand;
        if (collecting) occupancy[static_cast<std::size_t>(level)] += now - last_event;
        last_event = now;

        if (order_first) {
            check(outstanding, "order arrival without outstanding order");
            level = S;
            outstanding = false;
            next_order = kInf;
            ++replenishments;
            if (collecting && prev_replenish >= stats_start) {
                gap_sum += now - prev_replenish;
                ++gap_count;
            }
            prev_replenish = now;
        } else {
            ++arrivals;
            if (arrivals > n_warmup) {
                ++counted_arrivals;
                ++seen[static_cast<std::size_t>(level)];
            }
            if (level > 0) --level;  // else: lost sale, level unchanged
            check(level >= 0 && level <= S, "level out of [0, S]");
            if (arrivals == n_warmup) {
                collecting = true;
                stats_start = now;
                last_event = now;
            }
            next_demand = now + demand_gen.draw(rng_demand);
        }
        if (level <= s && !outstanding) {
            outstanding = true;
            next_order = now + lead_gen.draw(rng_lead);
        }
    }

    const double horizon = last_event - stats_start;
    if (!(horizon > 0))
        throw std::runtime_error("simulate_system: empty post-warm-up horizon");
    if (gap_count == 0)
        throw std::runtime_error(
            "simulate_system: cannot estimate EC, no full post-warm-up cycle (replenishments=" +
            std::to_string(replenishments) + ", arrivals=" + std::to_string(arrivals) + ")");
    if (counted_arrivals == 0)
        throw std::runtime_error("simulate_system: no post-warm-up arrivals");

    Labels out;
    out.P.assign(static_cast<std::size_t>(std::max(kPmfPad, S + 1)), 0.0);
    for (int i = 0; i <= S; ++i) out.P[static_cast<std::size_t>(i)] = occupancy[i] / horizon;
    out.pi_arrival.assign(out.P.size(), 0.0);
    for (int i = 0; i <= S; ++i)
        out.pi_arrival[static_cast<std::size_t>(i)] =
            static_cast<double>(seen[i]) / static_cast<double>(counted_arrivals);
    out.pi0 = out.pi_arrival[0];
    out.EC = gap_sum / static_cast<double>(gap_count);
    out.diag = {n_total, replenishments, cfg.warmup_frac, cfg.seed};
    return out;
}

Labels ctmc_oracle(int s, int S, double lambda, double mu) {
    if (!(s >= 0 && s < S)) throw std::invalid_argument("ctmc_oracle: need 0 <= s < S");
    if (!(lambda > 0 && mu > 0)) throw std::invalid_argument("ctmc_oracle: rates must be > 0");

    // States: (i, no order) for i in s+1..S, then (i, order out) for i in 0..s.
    const int n = S + 1;
    const auto idx_free = [&](int i) { return i - (s + 1); };
    const auto idx_out = [&](int i) { return (S - s) + i; };

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    const auto add = [&](int from, int to, double rate) {
        Q(from, to) += rate;
        Q(from, from) -= rate;
    };
    for (int i = s + 2; i <= S; ++i) add(idx_free(i), idx_free(i - 1), lambda);
    add(idx_free(s + 1), idx_out(s), lambda);
    for (int i = 1; i <= s; ++i) add(idx_out(i), idx_out(i - 1), lambda);
    for (int i = 0; i <= s; ++i) add(idx_out(i), idx_free(S), mu);

    Eigen::MatrixXd A = Q.transpose();
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[n - 1] = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd pi = lu.solve(b);
    if (!pi.allFinite() || (A * pi - b).cwiseAbs().maxCoeff() > 1e-9)
        throw std::runtime_error("ctmc_oracle: stationary system is numerically singular");
    if (pi.minCoeff() < -1e-9)
        throw std::runtime_error("ctmc_oracle: stationary solve left significant negative mass");
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();  // scrub roundoff at the 1e-16 level

    Labels out;
    out.P.assign(static_cast<std::size_t>(std::max(kPmfPad, S + 1)), 0.0);
    for (int i = 0; i <= s; ++i) out.P[static_cast<std::size_t>(i)] = pi[idx_out(i)];
    for (int i = s + 1; i <= S; ++i) out.P[static_cast<std::size_t>(i)] = pi[idx_free(i)];
    double p_out = 0;
    for (int i = 0; i <= s; ++i) p_out += pi[idx_out(i)];
    out.EC = 1.0 / (mu * p_out);
    out.pi0 = out.P[0];  // PASTA
    out.pi_arrival = out.P;
    return out;
}

Labels zero_lead_oracle(int s, int S, double m_D1) {
    if (!(s >= 0 && s < S)) throw std::invalid_argument("zero_lead_oracle: need 0 <= s < S");
    if (!(m_D1 > 0)) throw std::invalid_argument("zero_lead_oracle: m_D1 must be > 0");
    Labels out;
    out.P.assign(static_cast<std::size_t>(std::max(kPmfPad, S + 1)), 0.0);
    const double mass = 1.0 / (S - s);
    for (int i = s + 1; i <= S; ++i) out.P[static_cast<std::size_t>(i)] = mass;
    out.EC = (S - s) * m_D1;
    out.pi0 = 0.0;
    out.pi_arrival = out.P;
    return out;
}

double pmf_mean(std::span<const double> P) {
    double m = 0;
    for (std::size_t i = 0; i < P.size(); ++i) m += static_cast<double>(i) * P[i];
    return m;
}

ReplicationResult replication_ci_seeded(const SystemInstance& inst, const SimConfig& cfg,
                                        std::span<const std::uint64_t> run_seeds) {
    if (run_seeds.size() < 2)
        throw std::invalid_argument("replication_ci: need at least 2 runs");
    const auto n = static_cast<double>(run_seeds.size());
    std::vector<double> ei, ec, p0;
    for (std::uint64_t seed : run_seeds) {
        SimConfig run_cfg = cfg;
        run_cfg.seed = seed;
        const Labels lab = simulate_system(inst, run_cfg);
        ei.push_back(pmf_mean(lab.P));
        ec.push_back(lab.EC);
        p0.push_back(lab.pi0);
    }
    const auto summarize = [n](const std::vector<double>& x) {
        double mean = 0;
        for (double v : x) mean += v;
        mean /= n;
        double ss = 0;
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1));
        return ReplicationMeasure{mean, 2 * 1.96 * sd / std::sqrt(n)};
    };
    return {summarize(ei), summarize(ec), summarize(p0), static_cast<int>(run_seeds.size())};
}

ReplicationResult replication_ci(const SystemInstance& inst, const SimConfig& cfg, int runs) {
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(runs));
    for (int k = 0; k < runs; ++k) seeds.push_back(derive_stream_seed(cfg.seed, 1000 + k));
    return replication_ci_seeded(inst, cfg, seeds);
}

}  // namespace ssinv
