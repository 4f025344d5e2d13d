#include "ssinv/optimize.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ssinv/json_util.hpp"
#include "ssinv/parallel.hpp"

namespace ssinv {

double cost_g(std::span<const double> P, double EC, double pi0, const CostSpec& spec) {
    if (!(EC > 0)) throw std::invalid_argument("cost_g: EC must be > 0");
    if (!(spec.m_D1 > 0)) throw std::invalid_argument("cost_g: m_D1 must be > 0");
    if (pi0 < 0 || pi0 > 1) throw std::invalid_argument("cost_g: pi0 out of [0,1]");
    double mean_inv = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (P[i] < -1e-12) throw std::invalid_argument("cost_g: negative PMF entry");
        mean_inv += static_cast<double>(i) * P[i];
    }
    return spec.c_h * mean_inv + spec.K_o / EC + spec.c_r * (1.0 - pi0) / spec.m_D1 +
           spec.c_l * pi0 / spec.m_D1;
}

bool constraint_check(std::span<const double> P, const Constraint& constraint) {
    double tail = 0;
    for (std::size_t i = std::max(0, constraint.level); i < P.size(); ++i) tail += P[i];
    if (constraint.level <= 0) tail = 1.0;
    return tail >= constraint.min_prob;
}

namespace {

bool better(const GridEntry& a, const GridEntry& b) {
    if (a.g != b.g) return a.g < b.g;
    if (a.S != b.S) return a.S < b.S;  // prefer leaner policies on ties
    return a.s < b.s;
}

}  // namespace

GridResult grid_optimize(const MeasureBackend& backend, const CostSpec& spec,
                         const std::optional<Constraint>& constraint, int S_max) {
    if (S_max < 1 || S_max > kPmfPad - 1)
        throw std::invalid_argument("grid_optimize: S_max out of [1, 30]");
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(S_max) * (S_max + 1) / 2);
    for (int S = 1; S <= S_max; ++S)
        for (int s = 0; s < S; ++s) pairs.emplace_back(s, S);

    const std::vector<Labels> measures = backend(pairs);
    if (measures.size() != pairs.size())
        throw std::runtime_error("grid_optimize: backend returned wrong count");

    GridResult result;
    result.table.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Labels& lab = measures[i];
        GridEntry e;
        e.s = pairs[i].first;
        e.S = pairs[i].second;
        e.g = cost_g(lab.P, lab.EC * spec.m_D1, lab.pi0, spec);
        e.feasible = !constraint || constraint_check(lab.P, *constraint);
        result.table.push_back(e);
        if (!result.best_unconstrained || better(e, *result.best_unconstrained))
            result.best_unconstrained = e;
        if (e.feasible && (!result.best_constrained || better(e, *result.best_constrained)))
            result.best_constrained = e;
    }
    result.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return result;
}

MeasureBackend nn_backend(const ModelBundle& bundle, std::span<const double> mom_D,
                          std::span<const double> mom_L) {
    // The networks only know mean-1 systems; scale the k-th moments by
    // (1/m_D1)^k before building features. EC predictions stay normalized
    // (grid_optimize converts back with spec.m_D1).
    const double m_D1 = mom_D.empty() ? 0 : mom_D[0];
    if (!(m_D1 > 0)) throw std::invalid_argument("nn_backend: m_D^1 must be > 0");
    std::vector<double> nd(mom_D.begin(), mom_D.end()), nl(mom_L.begin(), mom_L.end());
    double ck = 1;
    for (std::size_t k = 0; k < std::max(nd.size(), nl.size()); ++k) {
        ck /= m_D1;
        if (k < nd.size()) nd[k] *= ck;
        if (k < nl.size()) nl[k] *= ck;
    }
    return [bundle, nd, nl](const std::vector<std::pair<int, int>>& pairs) {
        const int n_D = bundle.pmf.n_D, n_L = bundle.pmf.n_L;
        Eigen::MatrixXd X(static_cast<Eigen::Index>(pairs.size()), 2 + n_D + n_L);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::vector<double> f =
                feature_vector(pairs[i].first, pairs[i].second, nd, nl, n_D, n_L);
            for (int c = 0; c < static_cast<int>(f.size()); ++c)
                X(static_cast<Eigen::Index>(i), c) = f[static_cast<std::size_t>(c)];
        }
        const std::vector<PredictionBundle> preds = predict(bundle, X);
        std::vector<Labels> out(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            out[i].P.assign(preds[i].P_hat.data(), preds[i].P_hat.data() + preds[i].P_hat.size());
            out[i].EC = std::max(preds[i].EC_hat, 1e-9);  // linear head can dip <= 0
            out[i].pi0 = preds[i].pi0_hat;
        }
        return out;
    };
}

MeasureBackend mm_backend(double lambda, double mu) {
    if (!(lambda > 0 && mu > 0)) throw std::invalid_argument("mm_backend: rates must be > 0");
    return [lambda, mu](const std::vector<std::pair<int, int>>& pairs) {
        std::vector<Labels> out(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i)
            out[i] = ctmc_oracle(pairs[i].first, pairs[i].second, lambda, mu);
        return out;
    };
}

MeasureBackend sim_backend(const PhaseType& D, const PhaseType& L, const SimConfig& cfg,
                           int workers) {
    const double rho = ph_moments(L, 1).m[0] / ph_moments(D, 1).m[0];
    return [D, L, rho, cfg, workers](const std::vector<std::pair<int, int>>& pairs) {
        std::vector<Labels> out(pairs.size());
        parallel_for(static_cast<std::int64_t>(pairs.size()), workers, [&](std::int64_t i) {
            SystemInstance inst{pairs[static_cast<std::size_t>(i)].first,
                                pairs[static_cast<std::size_t>(i)].second, D, L, rho};
            SimConfig run = cfg;
            run.seed = derive_stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
            out[static_cast<std::size_t>(i)] = simulate_system(inst, run);
        });
        return out;
    };
}

std::string grid_csv(const GridResult& result) {
    std::string out = "s,S,g,feasible\n";
    for (const GridEntry& e : result.table) {
        out += std::to_string(e.s) + "," + std::to_string(e.S) + "," + fmt_double(e.g) + "," +
               (e.feasible ? "true" : "false") + "\n";
    }
    return out;
}

namespace {

void append_entry(std::string& out, const std::optional<GridEntry>& e) {
    if (!e) {
        out += "null";
        return;
    }
    out += "{\"s\":" + std::to_string(e->s) + ",\"S\":" + std::to_string(e->S) +
           ",\"g\":" + fmt_double(e->g) + "}";
}

}  // namespace

std::string grid_summary_json(const GridResult& result) {
    std::size_t feasible = 0;
    for (const GridEntry& e : result.table) feasible += e.feasible ? 1 : 0;
    std::string out = "{\"unconstrained\":";
    append_entry(out, result.best_unconstrained);
    out += ",\"constrained\":";
    append_entry(out, result.best_constrained);
    out += ",\"pairs\":" + std::to_string(result.table.size());
    out += ",\"feasible_pairs\":" + std::to_string(feasible);
    out += ",\"wall_ms\":" + fmt_double(result.wall_ms);
    out += "}";
    return out;
}

}  // namespace ssinv
