#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fmlm/retention.hpp"
#include "fmlm/rng.hpp"

using namespace fmlm;

// Independent long-double scalar oracle for the piecewise power-law.
static long double retention_oracle(int d, int e_buf, long double alpha, int n) {
    if (d < e_buf) return 1.0L;
    long double base =
        static_cast<long double>(d - e_buf + 1) / static_cast<long double>(n - e_buf);
    return 1.0L - std::pow(base, 1.0L / (std::exp(1.0L) * alpha));
}

TEST_CASE("retention inside the buffer is exactly 1") {
    RetentionConfig cfg{5, 3.0, 256};
    for (int d = 0; d < 5; ++d) CHECK(retention_value(d, cfg) == 1.0);
}

TEST_CASE("retention at the last distance is exactly 0") {
    for (int e_buf : {0, 1, 5, 10, 100}) {
        for (double alpha : {0.5, 1.0, 3.0, 8.0}) {
            RetentionConfig cfg{e_buf, alpha, 256};
            CHECK(retention_value(255, cfg) == 0.0);
        }
    }
}

TEST_CASE("retention matches the high-precision oracle") {
    RetentionConfig cfg{5, 3.0, 256};
    double expected = static_cast<double>(retention_oracle(5, 5, 3.0L, 256));
    CHECK(retention_value(5, cfg) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(retention_value(5, cfg) == doctest::Approx(0.4922).epsilon(1e-4));

    // dense grid over (d, E, alpha, n)
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        int n = 8 + static_cast<int>(rng.next_below(512));
        int e_buf = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        double alpha = 0.2 + rng.next_double() * 10.0;
        int d = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        RetentionConfig c{e_buf, alpha, n};
        long double want = retention_oracle(d, e_buf, alpha, n);
        CHECK(std::abs(retention_value(d, c) - static_cast<double>(want)) <= 1e-12);
    }
}

TEST_CASE("retention is strictly decreasing beyond the buffer") {
    RetentionConfig cfg{5, 3.0, 256};
    double prev = retention_value(5, cfg);
    for (int d = 6; d < 256; ++d) {
        double cur = retention_value(d, cfg);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("larger alpha decays faster at fixed distance") {
    RetentionConfig slow{5, 1.0, 256};
    RetentionConfig fast{5, 8.0, 256};
    for (int d = 5; d < 255; d += 13)
        CHECK(retention_value(d, slow) > retention_value(d, fast));
    // terminal point is 0 for both
    CHECK(retention_value(255, slow) == retention_value(255, fast));
}

TEST_CASE("retention rejects bad inputs") {
    RetentionConfig cfg{5, 3.0, 256};
    CHECK_THROWS_AS(retention_value(256, cfg), std::invalid_argument);
    CHECK_THROWS_AS(retention_value(-1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(retention_value(0, RetentionConfig{256, 3.0, 256}),
                    std::invalid_argument);
    CHECK_THROWS_AS(retention_value(0, RetentionConfig{5, 0.0, 256}),
                    std::invalid_argument);
}

TEST_CASE("bias matrix: all distances inside buffer give causal ones") {
    auto bias = build_bias_matrix(RetentionConfig{2, 1.0, 4}, 2);
    CHECK(bias.values(0, 0) == 1.0);
    CHECK(bias.values(0, 1) == 0.0);
    CHECK(bias.values(1, 0) == 1.0);
    CHECK(bias.values(1, 1) == 1.0);
}

TEST_CASE("bias matrix row equals per-distance retention values") {
    RetentionConfig cfg{5, 3.0, 256};
    auto bias = build_bias_matrix(cfg, 8);
    for (int j = 0; j <= 7; ++j)
        CHECK(bias.values(7, j) == retention_value(7 - j, cfg));
    CHECK(bias.values(7, 2) ==
          doctest::Approx(static_cast<double>(retention_oracle(5, 5, 3.0L, 256))));
    CHECK(bias.values(7, 1) == doctest::Approx(0.4471).epsilon(1e-4));
    CHECK(bias.values(7, 0) == doctest::Approx(0.4189).epsilon(1e-4));
    // strict upper triangle is zero
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) CHECK(bias.values(i, j) == 0.0);
}

TEST_CASE("bias matrix prefix consistency") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 8 + static_cast<int>(rng.next_below(64));
        RetentionConfig cfg{static_cast<int>(rng.next_below(n)),
                            0.3 + rng.next_double() * 5.0, n};
        int s = 2 + static_cast<int>(rng.next_below(n - 1));
        int k = 1 + static_cast<int>(rng.next_below(s));
        auto big = build_bias_matrix(cfg, s);
        auto small = build_bias_matrix(cfg, k);
        CHECK(big.values.topLeftCorner(k, k) == small.values);
    }
}

TEST_CASE("bias matrix rejects seq_len beyond context") {
    CHECK_THROWS_AS(build_bias_matrix(RetentionConfig{5, 3.0, 16}, 17),
                    std::invalid_argument);
}

TEST_CASE("conditions map to retention configs") {
    CHECK(!condition_to_retention(Perfect{}, 256).has_value());
    auto naive = condition_to_retention(Naive{3.0}, 256);
    REQUIRE(naive.has_value());
    CHECK(naive->buffer == 1);
    CHECK(naive->alpha == 3.0);
    CHECK(naive->context == 256);
    auto fleeting = condition_to_retention(Fleeting{3.0, 5}, 256);
    REQUIRE(fleeting.has_value());
    CHECK(fleeting->buffer == 5);
}

TEST_CASE("condition specs round-trip") {
    for (const char* spec : {"perfect", "naive:3", "fleeting:3:5"}) {
        Condition c = parse_condition(spec);
        CHECK(condition_spec(c) == spec);
    }
    CHECK_THROWS_AS(parse_condition("fleeting:3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_condition("bogus"), std::invalid_argument);
}

TEST_CASE("retention curve CSV has one row per distance") {
    std::string csv = retention_curve_csv(RetentionConfig{2, 1.0, 8});
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 9);  // header + 8 distances
    CHECK(csv.rfind("d,retention\n", 0) == 0);
}
