#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "ssinv/dataset.hpp"
#include "ssinv/json_util.hpp"

using namespace ssinv;
namespace fs = std::filesystem;

namespace {

PhaseType exponential_ph(double rate) {
    PhaseType ph;
    ph.alpha = Eigen::VectorXd::Ones(1);
    ph.T = Eigen::MatrixXd::Constant(1, 1, -rate);
    return ph;
}

std::string slurp(const std::string& path) { return read_text_file(path); }

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("ssinv_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("generate_record is deterministic in its seed") {
    const Record a = generate_record(5, derive_stream_seed(123, 5), {});
    const Record b = generate_record(5, derive_stream_seed(123, 5), {});
    CHECK(record_to_json(a) == record_to_json(b));
}

TEST_CASE("S is uniform on {1..30} and s on {0..S-1}") {
    int above15 = 0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream_seed(99, static_cast<std::uint64_t>(i)));
        InstanceGenConfig cfg;
        cfg.ph.max_order = 20;  // keep the scan fast
        const SystemInstance inst = generate_instance(rng, cfg);
        REQUIRE(inst.S >= 1);
        REQUIRE(inst.S <= 30);
        REQUIRE(inst.s >= 0);
        REQUIRE(inst.s < inst.S);
        above15 += inst.S > 15;
    }
    CHECK(std::abs(above15 / static_cast<double>(n) - 0.5) <= 0.02);
}

TEST_CASE("rho lies in [0.1, 10] and ln(rho) is not uniform") {
    int rho_above_1 = 0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream_seed(7, static_cast<std::uint64_t>(i)));
        InstanceGenConfig cfg;
        cfg.ph.max_order = 20;
        const SystemInstance inst = generate_instance(rng, cfg);
        REQUIRE(inst.rho >= 0.1 * (1 - 1e-9));
        REQUIRE(inst.rho <= 10 * (1 + 1e-9));
        rho_above_1 += inst.rho > 1;
    }
    // rho = 1/r with r ~ U(0.1,10): P(rho > 1) = 0.9/9.9, far below the 0.5
    // a log-uniform rho would give.
    const double frac = rho_above_1 / static_cast<double>(n);
    CHECK(frac < 0.15);
    CHECK(frac > 0.05);
}

TEST_CASE("feature vector layout and log transform") {
    Record rec;
    rec.inst.s = 2;
    rec.inst.S = 5;
    rec.inst.D = exponential_ph(1.0);
    rec.inst.L = exponential_ph(2.0);
    rec.mom_D = ph_moments(rec.inst.D, 5);
    rec.mom_L = ph_moments(rec.inst.L, 5);

    const std::vector<double> f = feature_vector(rec, 5, 5);
    const std::vector<double> expect{
        2, 5,
        0, std::log(2.0), std::log(6.0), std::log(24.0), std::log(120.0),
        std::log(0.5), std::log(0.5), std::log(0.75), std::log(1.5), std::log(3.75)};
    REQUIRE(f.size() == expect.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(f[i] == doctest::Approx(expect[i]).epsilon(1e-12));

    CHECK(feature_vector(rec, 1, 1).size() == 4);
}

TEST_CASE("nonpositive moments are a data error") {
    Record rec;
    rec.inst.s = 0;
    rec.inst.S = 1;
    rec.mom_D.m = {1, 2, 6, 24, 120};
    rec.mom_L.m = {0.0, 1, 1, 1, 1};
    CHECK_THROWS_AS(feature_vector(rec, 5, 5), std::invalid_argument);
}

TEST_CASE("segmentation matches the published grouping") {
    CHECK(segment_group(2, 7, 0.5, 10, 3) == 9);
    CHECK(segment_group(0.5, 0.5, 0.5, 10, 2) == 1);
    CHECK(segment_group(6, 6, 2, 20, 18) == 32);
    // boundary: s > floor(S/2) is "large"
    CHECK(segment_group(0.5, 0.5, 0.5, 10, 5) == 1);
    CHECK(segment_group(0.5, 0.5, 0.5, 10, 6) == 2);
    CHECK(segment_group(0.5, 0.5, 0.5, 16, 0) == 3);
}

TEST_CASE("segmentation is a partition consistent with stored meta") {
    for (int i = 0; i < 1000; ++i) {
        const Record rec = generate_record(i, derive_stream_seed(55, static_cast<std::uint64_t>(i)), {});
        REQUIRE(rec.meta.group_id >= 1);
        REQUIRE(rec.meta.group_id <= 32);
        CHECK(segment_group(rec) == rec.meta.group_id);
    }
}

TEST_CASE("record JSONL round trip preserves features to 1e-9") {
    for (int i = 0; i < 20; ++i) {
        const Record rec = generate_record(i, derive_stream_seed(31, static_cast<std::uint64_t>(i)), {});
        const Record back = record_from_json(record_to_json(rec), true);
        // rebuild the moments from the parsed subgenerators
        const MomentVector mom_D = ph_moments(back.inst.D, kStoredMoments);
        const MomentVector mom_L = ph_moments(back.inst.L, kStoredMoments);
        Record rebuilt = back;
        rebuilt.mom_D = mom_D;
        rebuilt.mom_L = mom_L;
        const std::vector<double> f0 = feature_vector(rec, 5, 5);
        const std::vector<double> f1 = feature_vector(rebuilt, 5, 5);
        for (std::size_t k = 0; k < f0.size(); ++k)
            CHECK(std::abs(f0[k] - f1[k]) <= 1e-9 * std::max(1.0, std::abs(f0[k])));
    }
}

TEST_CASE("stored moments agree with ph_moments of the stored distributions") {
    for (int i = 0; i < 10; ++i) {
        const Record rec = generate_record(i, derive_stream_seed(77, static_cast<std::uint64_t>(i)), {});
        const MomentVector mom_D = ph_moments(rec.inst.D, kStoredMoments);
        const MomentVector mom_L = ph_moments(rec.inst.L, kStoredMoments);
        for (int k = 0; k < kStoredMoments; ++k) {
            CHECK(std::abs(mom_D.m[static_cast<std::size_t>(k)] - rec.mom_D.m[static_cast<std::size_t>(k)]) <=
                  1e-9 * std::abs(rec.mom_D.m[static_cast<std::size_t>(k)]));
            CHECK(std::abs(mom_L.m[static_cast<std::size_t>(k)] - rec.mom_L.m[static_cast<std::size_t>(k)]) <=
                  1e-9 * std::abs(rec.mom_L.m[static_cast<std::size_t>(k)]));
        }
        CHECK(std::abs(rec.inst.rho - rec.mom_L.m[0] / rec.mom_D.m[0]) <= 1e-9);
        CHECK(rec.mom_D.m[0] == doctest::Approx(1.0).epsilon(1e-9));  // normalized demand
    }
}

TEST_CASE("build_splits produces valid, quota-filled, reproducible files" *
          doctest::timeout(1200)) {
    const fs::path dir = temp_dir("splits");
    SplitSizes sizes;
    sizes.n_train = 100;
    sizes.n_val = 20;
    sizes.test_per_group = 2;
    sizes.test_draw_budget = 60'000;
    const SimConfig sim{100'000, 0.1, 0};

    const SplitFiles files = build_splits(dir.string(), 2025, sizes, {}, sim, 2);
    REQUIRE(fs::exists(files.train));
    REQUIRE(fs::exists(files.val));
    REQUIRE(fs::exists(files.test));

    const std::vector<Record> train = read_records_jsonl(files.train, true);
    const std::vector<Record> test = read_records_jsonl(files.test, true);
    REQUIRE(train.size() == 100);
    REQUIRE(test.size() == 64);

    std::vector<int> per_group(33, 0);
    for (const Record& rec : test) ++per_group[static_cast<std::size_t>(rec.meta.group_id)];
    for (int g = 1; g <= 32; ++g) CHECK(per_group[static_cast<std::size_t>(g)] == 2);

    for (const Record& rec : train) {
        REQUIRE(rec.labels.has_value());
        CHECK(!validate(rec.inst.D));
        CHECK(!validate(rec.inst.L));
        double sum = 0;
        for (double p : rec.labels->P) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t j = static_cast<std::size_t>(rec.inst.S) + 1; j < rec.labels->P.size(); ++j)
            CHECK(rec.labels->P[j] == 0.0);
        CHECK(rec.labels->EC > rec.mom_L.m[0]);  // a cycle contains a full lead
        CHECK(rec.labels->pi0 >= 0.0);
        CHECK(rec.labels->pi0 <= 1.0);
    }

    SUBCASE("same master seed reproduces byte-identical files") {
        const fs::path dir2 = temp_dir("splits2");
        const SplitFiles files2 = build_splits(dir2.string(), 2025, sizes, {}, sim, 1);
        CHECK(slurp(files.train) == slurp(files2.train));
        CHECK(slurp(files.val) == slurp(files2.val));
        CHECK(slurp(files.test) == slurp(files2.test));
    }

    SUBCASE("relabeling with a fresh seed stays within replication error") {
        for (const std::size_t idx : {0UL, 7UL, 13UL}) {
            const Record& rec = train[idx];
            std::vector<std::uint64_t> seeds;
            for (std::uint64_t k = 0; k < 5; ++k) seeds.push_back(derive_stream_seed(4242, k));
            const ReplicationResult rep = replication_ci_seeded(rec.inst, sim, seeds);
            const double kse = 3.0 / (2 * 1.96);
            CHECK(std::abs(rep.cycle_time.mean - rec.labels->EC) <=
                  kse * rep.cycle_time.ci_length + 0.05 * rec.labels->EC);
            CHECK(std::abs(rep.pi0.mean - rec.labels->pi0) <=
                  kse * rep.pi0.ci_length + 0.01);
        }
    }
}

TEST_CASE("starved group raises an error naming it") {
    // An order-1-only mix never produces scv > 5, so half the groups starve.
    InstanceGenConfig gen;
    gen.ph.weights = {1, 0, 0, 0, 0, 0};
    try {
        draw_test_records(1, 1, gen, 3000, 1);
        FAIL("expected starvation error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("starved") != std::string::npos);
        CHECK(msg.find("17") != std::string::npos);  // scv_D > 5 groups unreachable
    }
}

TEST_CASE("dataset stats summarise shape ranges and groups") {
    std::vector<Record> records;
    for (int i = 0; i < 200; ++i)
        records.push_back(generate_record(i, derive_stream_seed(3, static_cast<std::uint64_t>(i)), {}));
    const DatasetStats st = dataset_stats(records);
    CHECK(st.n == 200);
    CHECK(st.labeled == 0);
    CHECK(st.scv_min > 0);
    CHECK(st.scv_max > st.scv_min);
    CHECK(st.rho_min >= 0.1 * (1 - 1e-9));
    CHECK(st.rho_max <= 10 * (1 + 1e-9));
    std::int64_t total = 0;
    for (std::int64_t c : st.group_counts) total += c;
    CHECK(total == 200);
    CHECK(dataset_stats_json(st).find("\"n\":200") != std::string::npos);
}
