#include "ssinv/phase_type.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ssinv/json_util.hpp"

namespace ssinv {

namespace {

constexpr double kAlphaSumTol = 1e-12;
constexpr double kRowSumRelTol = 1e-9;

// Mean absorption times from every phase, i.e. (-T)^{-1} 1. Because the
// inverse of -T is elementwise nonnegative, the max entry is exactly
// ||(-T)^{-1}||_inf, which gives the condition number for free.
struct AbsorptionSolve {
    Eigen::VectorXd times;
    bool ok = false;
    double cond_inf = 0;
};

AbsorptionSolve solve_absorption_times(const Eigen::MatrixXd& T) {
    AbsorptionSolve out;
    const Eigen::Index p = T.rows();
    const Eigen::MatrixXd negT = -T;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(negT);
    out.times = lu.solve(ones);
    if (!out.times.allFinite()) return out;
    const double residual = (negT * out.times - ones).cwiseAbs().maxCoeff();
    const double scale = negT.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(residual <= 1e-6 * std::max(1.0, scale * out.times.cwiseAbs().maxCoeff()))) return out;
    out.cond_inf = scale * out.times.maxCoeff();
    out.ok = out.times.minCoeff() > 0;
    return out;
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Reachability of a strictly positive exit rate from the support of alpha,
// following positive off-diagonal rates.
bool exit_reachable(const PhaseType& ph) {
    const int p = ph.order();
    const Eigen::VectorXd exits = ph.exit_rates();
    std::vector<char> seen(p, 0);
    std::vector<int> stack;
    for (int i = 0; i < p; ++i) {
        if (ph.alpha[i] > 0) {
            seen[i] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (exits[i] > 0) return true;
        for (int j = 0; j < p; ++j) {
            if (j != i && !seen[j] && ph.T(i, j) > 0) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return false;
}

}  // namespace

std::optional<std::string> validate(const PhaseType& ph) {
    const int p = ph.order();
    if (p < 1) return "order must be >= 1";
    if (p > kMaxPhOrder) return "order exceeds " + std::to_string(kMaxPhOrder);
    if (ph.T.rows() != p || ph.T.cols() != p) return "T shape does not match alpha length";
    if (!ph.alpha.allFinite() || !ph.T.allFinite()) return "non-finite entries";

    if (ph.alpha.minCoeff() < 0) return "alpha has negative entries";
    if (std::abs(ph.alpha.sum() - 1.0) > kAlphaSumTol) return "alpha does not sum to 1";

    for (int i = 0; i < p; ++i) {
        if (!(ph.T(i, i) < 0)) return "T diagonal must be strictly negative";
        double row = ph.T(i, i);
        for (int j = 0; j < p; ++j) {
            if (j == i) continue;
            if (ph.T(i, j) < 0) return "T off-diagonal must be nonnegative";
            row += ph.T(i, j);
        }
        if (row > kRowSumRelTol * std::abs(ph.T(i, i)))
            return "row sum positive: exit rate would be negative";
    }
    if (!exit_reachable(ph)) return "no strictly positive exit reachable from alpha";

    const AbsorptionSolve abs = solve_absorption_times(ph.T);
    if (!abs.ok) return "-T is singular or absorption times are not positive";
    return std::nullopt;
}

MomentVector ph_moments(const PhaseType& ph, int n) {
    if (n < 1) throw std::invalid_argument("ph_moments: n must be >= 1");
    const int p = ph.order();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    MomentVector out;
    out.m.reserve(n);

    double cond_inf = 0;
    Eigen::VectorXd x = ones;
    if (p > 32) {
        // Generated subgenerators are mostly banded or block diagonal;
        // sparse LU makes order-500 moment evaluation O(nnz)-ish.
        Eigen::SparseMatrix<double> negT(p, p);
        std::vector<Eigen::Triplet<double>> trips;
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                if (ph.T(i, j) != 0.0) trips.emplace_back(i, j, -ph.T(i, j));
        negT.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(negT);
        lu.factorize(negT);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("ph_moments: -T is numerically singular");
        for (int k = 1; k <= n; ++k) {
            x = lu.solve(x).eval();
            if (!x.allFinite())
                throw std::runtime_error("ph_moments: solve produced non-finite values");
            if (k == 1) {
                double norm_negT = 0;
                for (int i = 0; i < p; ++i) norm_negT = std::max(norm_negT, ph.T.row(i).cwiseAbs().sum());
                cond_inf = norm_negT * x.maxCoeff();
            }
            out.m.push_back(factorial(k) * ph.alpha.dot(x));
        }
    } else {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(-ph.T));
        for (int k = 1; k <= n; ++k) {
            x = lu.solve(x).eval();
            if (!x.allFinite())
                throw std::runtime_error("ph_moments: solve produced non-finite values");
            if (k == 1) {
                const double norm_negT = ph.T.cwiseAbs().rowwise().sum().maxCoeff();
                cond_inf = norm_negT * x.maxCoeff();
            }
            out.m.push_back(factorial(k) * ph.alpha.dot(x));
        }
    }
    if (cond_inf > 1e12)
        std::fprintf(stderr, "warning: ph_moments: cond_inf(-T) ~ %.3g exceeds 1e12\n", cond_inf);
    for (double mk : out.m)
        if (!(mk > 0) || !std::isfinite(mk))
            throw std::runtime_error("ph_moments: nonpositive or non-finite moment");
    return out;
}

ShapeStats ph_stats(const PhaseType& ph) {
    const MomentVector mv = ph_moments(ph, 4);
    const double m1 = mv.m[0], m2 = mv.m[1], m3 = mv.m[2], m4 = mv.m[3];
    const double var = m2 - m1 * m1;
    const double mu3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
    const double mu4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1;
    ShapeStats st;
    st.mean = m1;
    st.scv = var / (m1 * m1);
    st.skewness = mu3 / std::pow(var, 1.5);
    st.kurtosis = mu4 / (var * var);
    return st;
}

PhaseType rescale_to_mean(const PhaseType& ph, double target_mean) {
    if (!(target_mean > 0)) throw std::invalid_argument("rescale_to_mean: target must be > 0");
    const double mean = ph_moments(ph, 1).m[0];
    PhaseType out = ph;
    out.T *= mean / target_mean;
    return out;
}

namespace {

PhaseType make_exponential(Rng& rng) {
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Ones(1);
    ph.T = Eigen::MatrixXd::Constant(1, 1, -rng.log_uniform(1e-2, 1e2));
    return ph;
}

PhaseType make_erlang(int order, double rate) {
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Zero(order);
    ph.alpha[0] = 1;
    ph.T = Eigen::MatrixXd::Zero(order, order);
    for (int i = 0; i < order; ++i) {
        ph.T(i, i) = -rate;
        if (i + 1 < order) ph.T(i, i + 1) = rate;
    }
    return ph;
}

PhaseType sample_erlang(Rng& rng, int max_order) {
    // Log-uniform order spreads SCV = 1/k evenly across decades.
    const int hi = std::min(kMaxPhOrder, max_order);
    int k = static_cast<int>(std::floor(rng.log_uniform(2.0, hi + 1.0)));
    k = std::clamp(k, 2, hi);
    const double rate = k * rng.log_uniform(1e-2, 1e2);
    return make_erlang(k, rate);
}

PhaseType sample_hyperexponential(Rng& rng, int max_order) {
    const int branches = rng.uniform_int_inclusive(2, std::min(10, max_order));
    Eigen::VectorXd w(branches);
    for (int i = 0; i < branches; ++i) w[i] = rng.exponential(1.0);
    w /= w.sum();
    PhaseType ph;
    ph.alpha = w;
    ph.T = Eigen::MatrixXd::Zero(branches, branches);
    for (int i = 0; i < branches; ++i) ph.T(i, i) = -rng.log_uniform(1e-2, 1e2);
    return ph;
}

PhaseType sample_coxian(Rng& rng, int max_order) {
    const int p = rng.uniform_int_inclusive(2, std::min(50, max_order));
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Zero(p);
    ph.alpha[0] = 1;
    ph.T = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        const double rate = rng.log_uniform(1e-2, 1e2);
        ph.T(i, i) = -rate;
        if (i + 1 < p) ph.T(i, i + 1) = rate * rng.uniform01();  // rest exits
    }
    return ph;
}

PhaseType sample_erlang_mixture(Rng& rng, int max_order) {
    const int branches = rng.uniform_int_inclusive(2, 5);
    const int per_branch_cap = std::min(100, max_order / branches);
    std::vector<int> orders(branches);
    int total = 0;
    for (int& k : orders) {
        const int hi = std::max(1, per_branch_cap);
        k = std::clamp(static_cast<int>(std::floor(rng.log_uniform(1.0, hi + 1.0))), 1, hi);
        total += k;
    }
    Eigen::VectorXd w(branches);
    for (int i = 0; i < branches; ++i) w[i] = rng.exponential(1.0);
    w /= w.sum();

    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Zero(total);
    ph.T = Eigen::MatrixXd::Zero(total, total);
    int at = 0;
    for (int b = 0; b < branches; ++b) {
        const double branch_mean = rng.log_uniform(5e-2, 2e1);
        const double rate = orders[b] / branch_mean;
        ph.alpha[at] = w[b];
        for (int i = 0; i < orders[b]; ++i) {
            ph.T(at + i, at + i) = -rate;
            if (i + 1 < orders[b]) ph.T(at + i, at + i + 1) = rate;
        }
        at += orders[b];
    }
    return ph;
}

PhaseType sample_dense_random(Rng& rng, int max_order) {
    const int p = rng.uniform_int_inclusive(2, std::min(20, max_order));
    for (int attempt = 0; attempt < 200; ++attempt) {
        PhaseType ph;
        ph.alpha = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < p; ++i)
            if (rng.uniform01() <= 0.7) ph.alpha[i] = rng.exponential(1.0);
        if (ph.alpha.sum() == 0) ph.alpha[static_cast<int>(rng.uniform_int(p))] = 1;
        ph.alpha /= ph.alpha.sum();

        ph.T = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd exits = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j)
                if (j != i && rng.uniform01() <= 0.5) ph.T(i, j) = rng.log_uniform(1e-2, 1e2);
            if (rng.uniform01() <= 0.4) exits[i] = rng.log_uniform(1e-2, 1e2);
        }
        if (exits.maxCoeff() == 0) exits[p - 1] = rng.log_uniform(1e-2, 1e2);
        for (int i = 0; i < p; ++i) ph.T(i, i) = -(ph.T.row(i).sum() + exits[i]);

        const AbsorptionSolve abs = solve_absorption_times(ph.T);
        if (!abs.ok || !exit_reachable(ph)) continue;
        // Wildly mismatched exit and internal rates make the chain take
        // thousands of hops to absorb; cap the expected transition count so
        // a draw costs no more than the largest Erlang.
        const Eigen::VectorXd tau =
            Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd(-ph.T.transpose()))
                .solve(ph.alpha);
        const double expected_jumps = tau.dot(-ph.T.diagonal());
        if (expected_jumps > 500.0) continue;
        return ph;
    }
    throw std::runtime_error("sample_ph: dense family failed to produce a regular draw");
}

}  // namespace

PhaseType sample_ph(const PhGenConfig& cfg, Rng& rng) {
    if (cfg.max_order < 1 || cfg.max_order > kMaxPhOrder)
        throw std::invalid_argument("sample_ph: max_order must be in [1, 500]");
    static constexpr std::array<int, kNumPhFamilies> kMinOrder{1, 2, 2, 2, 2, 2};
    std::array<double, kNumPhFamilies> eff{};
    double total = 0;
    for (int f = 0; f < kNumPhFamilies; ++f) {
        if (cfg.weights[f] < 0)
            throw std::invalid_argument("sample_ph: negative family weight");
        eff[f] = (kMinOrder[f] <= cfg.max_order) ? cfg.weights[f] : 0.0;
        total += eff[f];
    }
    if (!(total > 0))
        throw std::invalid_argument("sample_ph: no family has positive weight under max_order");

    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double u = rng.uniform01() * total;
        double acc = 0;
        int fam = 0;
        for (int f = 0; f < kNumPhFamilies; ++f) {
            acc += eff[f];
            if (u <= acc) {
                fam = f;
                break;
            }
        }
        PhaseType ph;
        switch (static_cast<PhFamily>(fam)) {
            case PhFamily::kExponential: ph = make_exponential(rng); break;
            case PhFamily::kErlang: ph = sample_erlang(rng, cfg.max_order); break;
            case PhFamily::kHyperexponential: ph = sample_hyperexponential(rng, cfg.max_order); break;
            case PhFamily::kCoxian: ph = sample_coxian(rng, cfg.max_order); break;
            case PhFamily::kErlangMixture: ph = sample_erlang_mixture(rng, cfg.max_order); break;
            case PhFamily::kDenseRandom: ph = sample_dense_random(rng, cfg.max_order); break;
        }
        const MomentVector mv = ph_moments(ph, 2);
        const double mean = mv.m[0];
        const double scv = mv.m[1] / (mean * mean) - 1.0;
        if (mean < 1e-6 || mean > 1e6 || scv < 1e-4) continue;  // degenerate, redraw
        return ph;
    }
    throw std::runtime_error("sample_ph: exceeded redraw budget for nondegenerate draws");
}

PhSampler::PhSampler(const PhaseType& ph) : order_(ph.order()) {
    const int p = order_;
    init_cum_.resize(p);
    double acc = 0;
    for (int i = 0; i < p; ++i) {
        acc += ph.alpha[i];
        init_cum_[i] = acc;
    }
    init_cum_[p - 1] = 1.0;

    const Eigen::VectorXd exits = ph.exit_rates();
    phases_.resize(p);
    for (int i = 0; i < p; ++i) {
        Phase& ps = phases_[i];
        ps.rate = -ph.T(i, i);
        double cum = 0;
        for (int j = 0; j < p; ++j) {
            if (j == i || ph.T(i, j) <= 0) continue;
            cum += ph.T(i, j) / ps.rate;
            ps.cum_prob.push_back(cum);
            ps.target.push_back(j);
        }
        if (exits[i] > 0 || ps.target.empty()) {
            ps.cum_prob.push_back(1.0);
            ps.target.push_back(-1);
        }
        ps.cum_prob.back() = 1.0;
    }
}

double PhSampler::draw(Rng& rng) const {
    int phase = 0;
    if (order_ > 1) {
        const double u = rng.uniform01();
        phase = static_cast<int>(std::lower_bound(init_cum_.begin(), init_cum_.end(), u) -
                                 init_cum_.begin());
    }
    double t = 0;
    while (true) {
        const Phase& ps = phases_[phase];
        t += -std::log(rng.uniform01()) / ps.rate;
        int next;
        if (ps.target.size() == 1) {
            next = ps.target[0];
        } else {
            const double u = rng.uniform01();
            const std::size_t k = static_cast<std::size_t>(
                std::lower_bound(ps.cum_prob.begin(), ps.cum_prob.end(), u) - ps.cum_prob.begin());
            next = ps.target[std::min(k, ps.target.size() - 1)];
        }
        if (next < 0) return t;
        phase = next;
    }
}

double draw_variate(const PhaseType& ph, Rng& rng) {
    return PhSampler(ph).draw(rng);
}

void append_ph_json(std::string& out, const PhaseType& ph) {
    out += "{\"alpha\":[";
    for (int i = 0; i < ph.order(); ++i) {
        if (i) out += ',';
        append_json_double(out, ph.alpha[i]);
    }
    out += "],\"T\":[";
    for (int i = 0; i < ph.order(); ++i) {
        if (i) out += ',';
        out += '[';
        for (int j = 0; j < ph.order(); ++j) {
            if (j) out += ',';
            append_json_double(out, ph.T(i, j));
        }
        out += ']';
    }
    out += "]}";
}

std::string ph_to_json(const PhaseType& ph) {
    std::string out;
    append_ph_json(out, ph);
    return out;
}

PhaseType ph_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    PhaseType ph;
    const auto& alpha = j.at("alpha");
    const int p = static_cast<int>(alpha.size());
    ph.alpha = Eigen::VectorXd(p);
    for (int i = 0; i < p; ++i) ph.alpha[i] = alpha[i].get<double>();
    const auto& T = j.at("T");
    if (static_cast<int>(T.size()) != p)
        throw std::invalid_argument("ph_from_json: T row count does not match alpha");
    ph.T = Eigen::MatrixXd(p, p);
    for (int i = 0; i < p; ++i) {
        if (static_cast<int>(T[i].size()) != p)
            throw std::invalid_argument("ph_from_json: T is not square");
        for (int jcol = 0; jcol < p; ++jcol) ph.T(i, jcol) = T[i][jcol].get<double>();
    }
    return ph;
}

}  // namespace ssinv
