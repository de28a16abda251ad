#include "flowent/histogram.hpp"
#include "flowent/kernels.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace flowent;
using flowent::test::oracle_entropy;
using flowent::test::oracle_kt_entropy;

namespace {

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) b = static_cast<std::uint8_t>(rng());
    return v;
}

}  // namespace

TEST_SUITE("histogram") {

TEST_CASE("update counts symbols") {
    SymbolHistogram h;
    h.update(std::string_view("AAB"));
    CHECK(h.count(0x41) == 2);
    CHECK(h.count(0x42) == 1);
    CHECK(h.total() == 3);
}

TEST_CASE("empty payload leaves the histogram unchanged") {
    SymbolHistogram h;
    h.update(std::string_view("xyz"));
    const SymbolHistogram before = h;
    h.update(std::span<const std::uint8_t>{});
    CHECK(h == before);
}

TEST_CASE("merge with empty is identity") {
    SymbolHistogram h;
    h.update(std::string_view("hello world"));
    CHECK(merge(h, SymbolHistogram{}) == h);
    CHECK(merge(SymbolHistogram{}, h) == h);
}

TEST_CASE("plug-in entropy limit cases") {
    SymbolHistogram mono;
    mono.update(std::string(1617, 'a'));
    CHECK(shannon_entropy(mono) == 0.0);

    SymbolHistogram all;
    for (int i = 0; i < 256; ++i) {
        const auto b = static_cast<std::uint8_t>(i);
        all.update(std::span<const std::uint8_t>(&b, 1));
    }
    CHECK(std::abs(shannon_entropy(all) - 8.0) <= 1e-12);

    SymbolHistogram duo;
    duo.update(std::string(800, 'a') + std::string(800, 'b'));
    CHECK(shannon_entropy(duo) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(shannon_entropy(SymbolHistogram{}) == 0.0);
}

TEST_CASE("three-to-one split") {
    SymbolHistogram h;
    h.update(std::string_view("aaab"));
    // -(3/4 log2 3/4 + 1/4 log2 1/4), evaluated by hand.
    CHECK(shannon_entropy(h) == doctest::Approx(0.8112781244591328).epsilon(1e-15));
}

TEST_CASE("KT entropy") {
    CHECK(kt_entropy(SymbolHistogram{}) == 8.0);

    const std::string mono(1617, 'a');
    SymbolHistogram h;
    h.update(mono);
    const auto* p = reinterpret_cast<const std::uint8_t*>(mono.data());
    CHECK(kt_entropy(h) == doctest::Approx(oracle_kt_entropy({p, mono.size()})).epsilon(1e-12));
    CHECK(kt_entropy(h) > shannon_entropy(h));

    SymbolHistogram::Counts big{};
    big.fill(1'000'000);
    CHECK(std::abs(kt_entropy(SymbolHistogram::from_counts(big)) - 8.0) <= 1e-6);
}

TEST_CASE("estimator names") {
    CHECK(parse_estimator("mle") == Estimator::mle);
    CHECK(parse_estimator("kt") == Estimator::kt);
    CHECK_THROWS_AS(parse_estimator("miller"), std::invalid_argument);
    CHECK(to_string(Estimator::kt) == "kt");
}

TEST_CASE("counter overflow is detected") {
    SymbolHistogram::Counts c{};
    c[0] = std::numeric_limits<std::uint64_t>::max();
    SymbolHistogram h = SymbolHistogram::from_counts(c);
    const SymbolHistogram before = h;
    CHECK_THROWS_AS(h.update(std::string_view("x")), CounterOverflow);
    CHECK(h == before);
    CHECK_THROWS_AS(h.merge(h), CounterOverflow);

    c[1] = 1;
    CHECK_THROWS_AS(SymbolHistogram::from_counts(c), CounterOverflow);
}

TEST_CASE("property: entropy bounded and matches the two-pass oracle") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = rng() % 5000;
        auto data = random_bytes(rng, n);
        // Skew some buffers towards few symbols.
        if (i % 3 == 0) {
            for (auto& b : data) b &= 0x07;
        }
        SymbolHistogram h;
        h.update(data);
        const double e = shannon_entropy(h);
        CHECK(e >= 0.0);
        CHECK(e <= 8.0);
        CHECK(e == doctest::Approx(oracle_entropy(data)).epsilon(1e-12));
        const double k = kt_entropy(h);
        CHECK(k >= 0.0);
        CHECK(k <= 8.0);
    }
}

TEST_CASE("property: merge is order independent") {
    std::mt19937_64 rng(22);
    const auto a = random_bytes(rng, 1000);
    const auto b = random_bytes(rng, 333);
    SymbolHistogram ha;
    SymbolHistogram hb;
    ha.update(a);
    hb.update(b);
    SymbolHistogram whole;
    whole.update(a);
    whole.update(b);
    CHECK(merge(ha, hb) == merge(hb, ha));
    CHECK(merge(ha, hb) == whole);
}

TEST_CASE("scalar kernels reproduce the oracle bit for bit") {
    REQUIRE(kernels::select("scalar"));
    std::mt19937_64 rng(23);
    for (int i = 0; i < 200; ++i) {
        const auto data = random_bytes(rng, rng() % 3000);
        SymbolHistogram h;
        h.update(data);
        CHECK(shannon_entropy(h) == oracle_entropy(data));
    }
    kernels::select("auto");
}

}  // TEST_SUITE
