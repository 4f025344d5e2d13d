#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ssinv/phase_type.hpp"

using namespace ssinv;

namespace {

PhaseType exponential_ph(double rate) {
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Ones(1);
    ph.T = Eigen::MatrixXd::Constant(1, 1, -rate);
    return ph;
}

PhaseType erlang_ph(int k, double rate) {
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Zero(k);
    ph.alpha[0] = 1;
    ph.T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        ph.T(i, i) = -rate;
        if (i + 1 < k) ph.T(i, i + 1) = rate;
    }
    return ph;
}

PhaseType hyperexp_ph(const std::vector<double>& w, const std::vector<double>& rates) {
    const int p = static_cast<int>(w.size());
    PhaseType ph;
    ph.alpha = Eigen::VectorXd(p);
    ph.T = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        ph.alpha[i] = w[static_cast<std::size_t>(i)];
        ph.T(i, i) = -rates[static_cast<std::size_t>(i)];
    }
    return ph;
}

// Brute-force moments by quadrature of the PH density f(x) = alpha e^{Tx} t:
// RK4 on u' = uT with composite Simpson accumulation of x^k f(x).
std::vector<double> quadrature_moments(const PhaseType& ph, int n_moments) {
    const double mean = ph_moments(ph, 1).m[0];
    const double range = 200.0 * mean;
    const double max_rate = (-ph.T.diagonal()).maxCoeff();
    double h = std::min(1.0 / max_rate, mean / 200.0);
    auto steps = static_cast<long>(std::ceil(range / h));
    if (steps % 2) ++steps;
    h = range / static_cast<double>(steps);

    const Eigen::VectorXd exits = ph.exit_rates();
    Eigen::RowVectorXd u = ph.alpha.transpose();
    std::vector<double> mom(static_cast<std::size_t>(n_moments) + 1, 0.0);  // mom[0] = mass

    auto add = [&](long i, const Eigen::RowVectorXd& state) {
        const double x = static_cast<double>(i) * h;
        const double f = state * exits;
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double xk = 1;
        for (int k = 0; k <= n_moments; ++k) {
            mom[static_cast<std::size_t>(k)] += w * xk * f;
            xk *= x;
        }
    };

    add(0, u);
    for (long i = 1; i <= steps; ++i) {
        const Eigen::RowVectorXd k1 = u * ph.T;
        const Eigen::RowVectorXd k2 = (u + 0.5 * h * k1) * ph.T;
        const Eigen::RowVectorXd k3 = (u + 0.5 * h * k2) * ph.T;
        const Eigen::RowVectorXd k4 = (u + h * k3) * ph.T;
        u += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        add(i, u);
    }
    for (double& m : mom) m *= h / 3.0;
    return mom;
}

}  // namespace

TEST_CASE("exponential moments are k!") {
    const MomentVector mv = ph_moments(exponential_ph(1.0), 5);
    const std::vector<double> expect{1, 2, 6, 24, 120};
    for (int k = 0; k < 5; ++k)
        CHECK(mv.m[static_cast<std::size_t>(k)] ==
              doctest::Approx(expect[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("Erlang(2, rate 2) moments") {
    const MomentVector mv = ph_moments(erlang_ph(2, 2.0), 5);
    const std::vector<double> expect{1, 1.5, 3, 7.5, 22.5};
    for (int k = 0; k < 5; ++k)
        CHECK(mv.m[static_cast<std::size_t>(k)] ==
              doctest::Approx(expect[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("hyperexponential mixture moments") {
    const MomentVector mv = ph_moments(hyperexp_ph({0.5, 0.5}, {1.0, 2.0}), 2);
    CHECK(mv.m[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(mv.m[1] == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("moments work at order 500 through the sparse path") {
    const PhaseType ph = erlang_ph(500, 500.0);  // mean 1, scv 1/500
    const MomentVector mv = ph_moments(ph, 2);
    CHECK(mv.m[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mv.m[1] / (mv.m[0] * mv.m[0]) - 1.0 == doctest::Approx(1.0 / 500).epsilon(1e-8));
}

TEST_CASE("rescale: exponential rate 2 to mean 1 gives rate 1") {
    const PhaseType out = rescale_to_mean(exponential_ph(2.0), 1.0);
    CHECK(out.T(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("rescale to current mean is the identity") {
    Rng rng(3);
    const PhaseType ph = sample_ph({}, rng);
    const double mean = ph_moments(ph, 1).m[0];
    const PhaseType out = rescale_to_mean(ph, mean);
    CHECK((out.T - ph.T).cwiseAbs().maxCoeff() <= 1e-12 * ph.T.cwiseAbs().maxCoeff());
}

TEST_CASE("rescale Erlang(2, rate 2) to mean 0.2") {
    const PhaseType out = rescale_to_mean(erlang_ph(2, 2.0), 0.2);
    CHECK(out.T(0, 0) == doctest::Approx(-10.0).epsilon(1e-12));
    const MomentVector mv = ph_moments(out, 5);
    const std::vector<double> expect{0.2, 0.06, 0.024, 0.012, 0.0072};
    for (int k = 0; k < 5; ++k)
        CHECK(mv.m[static_cast<std::size_t>(k)] ==
              doctest::Approx(expect[static_cast<std::size_t>(k)]).epsilon(1e-10));
}

TEST_CASE("rescale leaves shape statistics fixed") {
    for (std::uint64_t seed : {10ULL, 11ULL, 12ULL, 13ULL, 14ULL}) {
        Rng rng(seed);
        const PhaseType ph = sample_ph({}, rng);
        const ShapeStats before = ph_stats(ph);
        const ShapeStats after = ph_stats(rescale_to_mean(ph, 0.37));
        CHECK(std::abs(after.scv - before.scv) <= 1e-9 * std::abs(before.scv));
        CHECK(std::abs(after.skewness - before.skewness) <= 1e-9 * std::abs(before.skewness));
        CHECK(std::abs(after.kurtosis - before.kurtosis) <= 1e-9 * std::abs(before.kurtosis));
        CHECK(ph_stats(rescale_to_mean(ph, 0.37)).mean == doctest::Approx(0.37).epsilon(1e-10));
    }
}

TEST_CASE("order-1 draw is the exponential inverse CDF") {
    Rng probe(77);
    const double u = probe.uniform01();
    Rng rng(77);
    CHECK(draw_variate(exponential_ph(2.5), rng) == -std::log(u) / 2.5);
}

TEST_CASE("law of large numbers against ph_moments") {
    const int n = 1'000'000;
    SUBCASE("Exp(1) sample mean") {
        Rng rng(101);
        const PhSampler gen(exponential_ph(1.0));
        double sum = 0;
        for (int i = 0; i < n; ++i) sum += gen.draw(rng);
        CHECK(std::abs(sum / n - 1.0) < 0.01);
    }
    SUBCASE("Erlang(2, rate 2) sample variance") {
        Rng rng(102);
        const PhSampler gen(erlang_ph(2, 2.0));
        double sum = 0, sumsq = 0;
        for (int i = 0; i < n; ++i) {
            const double x = gen.draw(rng);
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        CHECK(std::abs(var - 0.5) < 0.02 * 0.5);
    }
}

TEST_CASE("Monte Carlo moments match ph_moments within 3 standard errors") {
    Rng cfg_rng(2024);
    PhGenConfig small;
    small.max_order = 30;
    for (int rep = 0; rep < 3; ++rep) {
        const PhaseType ph = sample_ph(small, cfg_rng);
        const MomentVector mv = ph_moments(ph, 3);
        const PhSampler gen(ph);
        Rng rng(500 + static_cast<std::uint64_t>(rep));
        const int n = 200'000;
        std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
        for (int i = 0; i < n; ++i) {
            const double x = gen.draw(rng);
            double xk = 1;
            for (int k = 0; k < 3; ++k) {
                xk *= x;
                sum[static_cast<std::size_t>(k)] += xk;
                sumsq[static_cast<std::size_t>(k)] += xk * xk;
            }
        }
        for (int k = 0; k < 3; ++k) {
            const double est = sum[static_cast<std::size_t>(k)] / n;
            const double var = sumsq[static_cast<std::size_t>(k)] / n - est * est;
            const double se = std::sqrt(std::max(var, 0.0) / n);
            CHECK(std::abs(est - mv.m[static_cast<std::size_t>(k)]) <= 3 * se + 1e-12);
        }
    }
}

TEST_CASE("exponential shape constants") {
    const ShapeStats st = ph_stats(exponential_ph(1.0));
    CHECK(st.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.scv == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.skewness == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(st.kurtosis == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("Erlang-2 shape constants") {
    const ShapeStats st = ph_stats(erlang_ph(2, 2.0));
    CHECK(st.scv == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(st.skewness == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("stats agree with density quadrature on a random seed-42 draw") {
    PhGenConfig cfg;
    cfg.max_order = 12;
    cfg.weights = {0, 0, 0, 0, 0, 1};  // dense family: least structured case
    Rng rng(42);
    const PhaseType ph = sample_ph(cfg, rng);
    const std::vector<double> q = quadrature_moments(ph, 4);
    REQUIRE(std::abs(q[0] - 1.0) < 1e-4);  // captured mass

    const double m1 = q[1], m2 = q[2], m3 = q[3], m4 = q[4];
    const double var = m2 - m1 * m1;
    const ShapeStats st = ph_stats(ph);
    CHECK(std::abs(st.mean - m1) <= 1e-3 * std::abs(m1));
    CHECK(std::abs(st.scv - (var / (m1 * m1))) <= 1e-3 * std::abs(st.scv));
    const double skew = (m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1) / std::pow(var, 1.5);
    CHECK(std::abs(st.skewness - skew) <= 1e-3 * std::abs(st.skewness));
    const double kurt =
        (m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1) / (var * var);
    CHECK(std::abs(st.kurtosis - kurt) <= 1e-3 * std::abs(st.kurtosis));
}

TEST_CASE("order-1 family config always yields an exponential") {
    PhGenConfig cfg;
    cfg.weights = {1, 0, 0, 0, 0, 0};
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed);
        const PhaseType ph = sample_ph(cfg, rng);
        CHECK(ph.order() == 1);
        CHECK(ph.alpha[0] == 1.0);
        CHECK(ph.T(0, 0) < 0);
    }
}

TEST_CASE("sampling is deterministic in the seed") {
    Rng a(42), b(42);
    const PhaseType x = sample_ph({}, a);
    const PhaseType y = sample_ph({}, b);
    REQUIRE(x.order() == y.order());
    CHECK((x.alpha - y.alpha).cwiseAbs().maxCoeff() == 0.0);
    CHECK((x.T - y.T).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("500 default draws span low and high SCV") {
    Rng rng(4242);
    int low = 0, high = 0;
    for (int i = 0; i < 500; ++i) {
        const PhaseType ph = sample_ph({}, rng);
        const MomentVector mv = ph_moments(ph, 2);
        const double scv = mv.m[1] / (mv.m[0] * mv.m[0]) - 1.0;
        low += scv < 0.1;
        high += scv > 10.0;
    }
    CHECK(low >= 1);
    CHECK(high >= 1);
}

TEST_CASE("validator accepts every sampled distribution" * doctest::timeout(600)) {
    Rng rng(9001);
    for (int i = 0; i < 10'000; ++i) {
        const PhaseType ph = sample_ph({}, rng);
        const auto err = validate(ph);
        if (err) FAIL("draw ", i, " rejected: ", *err);
        REQUIRE(ph.order() <= kMaxPhOrder);
    }
}

TEST_CASE("validator rejects malformed inputs") {
    PhaseType ph = exponential_ph(1.0);
    ph.alpha[0] = 0.5;
    CHECK(validate(ph).has_value());  // alpha sum

    ph = exponential_ph(1.0);
    ph.T(0, 0) = 0;
    CHECK(validate(ph).has_value());  // zero diagonal

    ph = erlang_ph(2, 1.0);
    ph.T(1, 0) = -0.1;
    CHECK(validate(ph).has_value());  // negative off-diagonal

    // no reachable exit: phase 2 loops mass back, all exits zero
    PhaseType loop;
    loop.alpha = Eigen::VectorXd::Zero(2);
    loop.alpha[0] = 1;
    loop.T = Eigen::MatrixXd::Zero(2, 2);
    loop.T(0, 0) = -1;
    loop.T(0, 1) = 1;
    loop.T(1, 1) = -1;
    loop.T(1, 0) = 1;
    CHECK(validate(loop).has_value());
}

TEST_CASE("raw moments are log-convex") {
    Rng rng(31337);
    for (int i = 0; i < 100; ++i) {
        const PhaseType ph = sample_ph({}, rng);
        const MomentVector mv = ph_moments(ph, 5);
        for (int k = 2; k <= 4; ++k) {
            const double lhs = mv.m[static_cast<std::size_t>(k - 2)] * mv.m[static_cast<std::size_t>(k)];
            const double rhs = mv.m[static_cast<std::size_t>(k - 1)] * mv.m[static_cast<std::size_t>(k - 1)];
            CHECK(lhs >= rhs * (1 - 1e-12));
        }
    }
}

TEST_CASE("invalid configs are rejected") {
    Rng rng(1);
    PhGenConfig cfg;
    cfg.max_order = 0;
    CHECK_THROWS_AS(sample_ph(cfg, rng), std::invalid_argument);
    cfg.max_order = 501;
    CHECK_THROWS_AS(sample_ph(cfg, rng), std::invalid_argument);
    cfg = {};
    cfg.weights = {0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(sample_ph(cfg, rng), std::invalid_argument);
    cfg = {};
    cfg.weights[2] = -1;
    CHECK_THROWS_AS(sample_ph(cfg, rng), std::invalid_argument);
    cfg = {};
    cfg.max_order = 1;
    cfg.weights = {0, 1, 1, 1, 1, 1};  // nothing fits under order 1
    CHECK_THROWS_AS(sample_ph(cfg, rng), std::invalid_argument);
}

TEST_CASE("JSON round trip is exact") {
    Rng rng(8);
    const PhaseType ph = sample_ph({}, rng);
    const PhaseType back = ph_from_json(ph_to_json(ph));
    REQUIRE(back.order() == ph.order());
    CHECK((back.alpha - ph.alpha).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.T - ph.T).cwiseAbs().maxCoeff() == 0.0);
}
