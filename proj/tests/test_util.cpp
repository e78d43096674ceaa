#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "fmlm/io.hpp"
#include "fmlm/retention.hpp"
#include "fmlm/rng.hpp"
#include "fmlm/svg.hpp"

using namespace fmlm;

TEST_CASE("fnv1a64 matches published reference values") {
    CHECK(fnv1a64(std::string("")) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ULL);
}

TEST_CASE("atomic_write creates and replaces files") {
    auto path = std::filesystem::temp_directory_path() / "fmlm_io_test.txt";
    atomic_write(path, "first");
    CHECK(read_file(path) == "first");
    atomic_write(path, "second");
    CHECK(read_file(path) == "second");
    std::filesystem::remove(path);
    // no stray temp files left behind
    for (const auto& entry : std::filesystem::directory_iterator(
             std::filesystem::temp_directory_path())) {
        auto name = entry.path().filename().string();
        CHECK(name.find("fmlm_io_test.txt.") == std::string::npos);
    }
}

TEST_CASE("fmt_double round-trips exactly") {
    for (double v : {0.0, -0.0, 1.0 / 3.0, 6e-4, 13693824.0, -2.718281828459045,
                     1e-300, 1e300}) {
        std::string s = fmt_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(fmt_double(std::nan("")) == "nan");
}

TEST_CASE("CSV escaping and splitting are inverse") {
    std::vector<std::string> fields{"plain", "with,comma", "with\"quote",
                                    "both\",\"cases", ""};
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_escape(fields[i]);
    }
    CHECK(split_csv_line(line) == fields);
}

TEST_CASE("keyed draws are stateless and decorrelated") {
    CHECK(keyed_u64(1, 2) == keyed_u64(1, 2));
    CHECK(keyed_u64(1, 2) != keyed_u64(2, 1));
    CHECK(keyed_u64(1, 2) != keyed_u64(1, 3));
    // low-bit balance over a counter sweep
    int ones = 0;
    for (std::uint64_t c = 0; c < 4096; ++c) ones += keyed_u64(7, c) & 1;
    CHECK(ones > 1850);
    CHECK(ones < 2250);
}

TEST_CASE("rng streams are reproducible and roughly uniform") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng r(6);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double v = r.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        sum += v;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("normal draws have the right first two moments") {
    Rng r(8);
    const int n = 50000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = r.next_normal();
        sum += v;
        sq += v * v;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(1.0).scale(0.02));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("line chart embeds series and axis labels") {
    Series s1{"perfect", {0, 1, 2}, {1.0, 1.0, 1.0}};
    Series s2{"fleeting", {0, 1, 2}, {1.0, 0.6, 0.0}};
    std::string svg = svg_line_chart("Retention", "distance", "retention", {s1, s2});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("Retention") != std::string::npos);
    CHECK(svg.find("distance") != std::string::npos);
    CHECK(svg.find("perfect") != std::string::npos);
    CHECK(svg.find("fleeting") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("slope chart draws one line per pair plus the annotation") {
    std::vector<SlopePair> pairs{{3.1, 3.2}, {3.0, 3.15}, {2.95, 3.05}};
    std::string svg =
        svg_slope_chart("Paired runs", "perfect", "naive", pairs, "p = 0.001 (**)");
    CHECK(svg.find("p = 0.001") != std::string::npos);
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<line", pos)) != std::string::npos) {
        ++count;
        pos += 5;
    }
    CHECK(count >= pairs.size());
}

TEST_CASE("bar chart escapes XML special characters") {
    std::vector<BarGroup> groups{{"Q1", {1.0, 2.0}}, {"Q2", {0.5, 0.25}}};
    std::string svg = svg_bar_chart("under & over <SSE>", {"under", "over"}, groups);
    CHECK(svg.find("under &amp; over &lt;SSE&gt;") != std::string::npos);
    CHECK(svg.find("<rect") != std::string::npos);
    // four bars
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<rect", pos)) != std::string::npos) {
        ++count;
        pos += 5;
    }
    CHECK(count >= 4);
}

TEST_CASE("charts are deterministic byte-for-byte") {
    Series s{"a", {0, 1}, {2, 3}};
    CHECK(svg_line_chart("t", "x", "y", {s}) == svg_line_chart("t", "x", "y", {s}));
}
