#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ssinv/rng.hpp"

using namespace ssinv;

TEST_CASE("same seed reproduces the stream bit for bit") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
    CHECK(equal == 0);
}

TEST_CASE("uniform01 lies in (0, 1] and is roughly uniform") {
    Rng rng(7);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform_int covers the range without bias") {
    Rng rng(11);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(10)];
    for (int c : counts) CHECK(std::abs(c - n / 10) < 600);  // ~6 sigma
}

TEST_CASE("substream seeds are distinct across ids and masters") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {1ULL, 2ULL, 12345ULL})
        for (std::uint64_t id = 0; id < 2000; ++id)
            seen.insert(derive_stream_seed(master, id));
    CHECK(seen.size() == 3 * 2000);
}

TEST_CASE("substreams look independent of the parent stream") {
    Rng parent(99);
    Rng child(derive_stream_seed(99, 0));
    int equal = 0;
    for (int i = 0; i < 64; ++i) equal += parent.next_u64() == child.next_u64();
    CHECK(equal == 0);
}

TEST_CASE("exponential draw is the documented inverse CDF") {
    Rng a(5), b(5);
    const double u = a.uniform01();
    CHECK(b.exponential(3.0) == -std::log(u) / 3.0);
}
