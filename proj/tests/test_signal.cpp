#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <optional>

#include "mforge/errors.hpp"
#include "mforge/rng.hpp"
#include "mforge/signal.hpp"
#include "support/oracles.hpp"

using namespace mforge;
using namespace mforge::signal;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path p = fs::temp_directory_path() / "mforge_test_signal";
    fs::create_directories(p);
    return p;
}

fs::path write_file(const std::string& name, const std::string& content) {
    fs::path p = temp_dir() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

Signal make_signal(const std::vector<std::optional<double>>& samples,
                   std::int64_t start = 17226 * 86400 /* 2017-03-01 */, int period = 300) {
    Signal s;
    s.patient_id = "p1";
    s.session_id = "a";
    s.start_time = start;
    s.sample_period = period;
    for (const auto& v : samples) {
        s.values.push_back(v.value_or(0.0));
        s.present.push_back(v.has_value());
        s.observed.push_back(v.has_value());
    }
    return s;
}

std::string csv_header() { return "patient_id,session_id,timestamp,value\n"; }

}  // namespace

TEST_CASE("load_signals: empty file yields an empty set") {
    auto p = write_file("empty.csv", "");
    CHECK(load_signals(p.string()).empty());
    auto p2 = write_file("header_only.csv", csv_header());
    CHECK(load_signals(p2.string()).empty());
}

TEST_CASE("load_signals: three-day session at 5-minute period has T = 864") {
    std::int64_t start = parse_iso8601("2017-03-01T00:00:00Z");
    std::string body = csv_header();
    for (int i = 0; i < 864; ++i)
        body += "p1,a," + format_iso8601(start + i * 300) + ",120\n";
    auto p = write_file("threeday.csv", body);
    auto signals = load_signals(p.string());
    REQUIRE(signals.size() == 1);
    CHECK(signals[0].length() == 864);
    CHECK(signals[0].patient_id == "p1");
}

TEST_CASE("load_signals: out-of-range value is rejected with its row number") {
    std::int64_t start = parse_iso8601("2017-03-01T00:00:00Z");
    std::string body = csv_header();
    body += "p1,a," + format_iso8601(start) + ",120\n";
    body += "p1,a," + format_iso8601(start + 300) + ",39\n";
    auto p = write_file("range.csv", body);
    try {
        load_signals(p.string());
        FAIL("expected a load error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("39") != std::string::npos);
    }
}

TEST_CASE("load_signals: non-monotone timestamps are an error") {
    std::int64_t start = parse_iso8601("2017-03-01T00:00:00Z");
    std::string body = csv_header();
    body += "p1,a," + format_iso8601(start + 300) + ",120\n";
    body += "p1,a," + format_iso8601(start) + ",120\n";
    auto p = write_file("monotone.csv", body);
    CHECK_THROWS_AS(load_signals(p.string()), ValidationError);
}

TEST_CASE("load_signals: skipped grid rows and blank values become marked gaps") {
    std::int64_t start = parse_iso8601("2017-03-01T00:00:00Z");
    std::string body = csv_header();
    body += "p1,a," + format_iso8601(start) + ",100\n";
    body += "p1,a," + format_iso8601(start + 300) + ",\n";       // blank value
    body += "p1,a," + format_iso8601(start + 900) + ",110\n";    // skips one grid slot
    auto p = write_file("gaps.csv", body);
    auto signals = load_signals(p.string());
    REQUIRE(signals.size() == 1);
    const Signal& s = signals[0];
    REQUIRE(s.length() == 4);
    CHECK(s.present[0]);
    CHECK(!s.present[1]);
    CHECK(!s.present[2]);
    CHECK(s.present[3]);
}

TEST_CASE("load_signals: JSON sessions with nulls") {
    auto p = write_file("session.json", R"([{
        "patient_id": "p7", "session_id": "x",
        "start_time": "2017-03-01T00:00:00Z",
        "values": [100, null, 120]
    }])");
    auto signals = load_signals(p.string());
    REQUIRE(signals.size() == 1);
    CHECK(signals[0].patient_id == "p7");
    CHECK(!signals[0].present[1]);
    CHECK(signals[0].values[2] == 120.0);
}

TEST_CASE("interpolate_gaps: midpoint of a line") {
    auto s = interpolate_gaps(make_signal({100.0, std::nullopt, 120.0}));
    CHECK(s.values[1] == doctest::Approx(110.0).epsilon(1e-12));
    CHECK(s.present[1]);
    CHECK(!s.observed[1]);
}

TEST_CASE("interpolate_gaps: closed-form linear interpolant across a 3-gap") {
    auto s = interpolate_gaps(make_signal({80.0, std::nullopt, std::nullopt, std::nullopt, 120.0}));
    CHECK(s.values[1] == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(s.values[2] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(s.values[3] == doctest::Approx(110.0).epsilon(1e-12));
}

TEST_CASE("interpolate_gaps: fully observed signal is unchanged") {
    Signal in = make_signal({100.0, 105.0, 110.0});
    Signal out = interpolate_gaps(in);
    CHECK(out.values == in.values);
    CHECK(out.present == in.present);
}

TEST_CASE("interpolate_gaps: leading and trailing gaps stay missing") {
    auto s = interpolate_gaps(make_signal({std::nullopt, 100.0, std::nullopt}));
    CHECK(!s.present[0]);
    CHECK(!s.present[2]);
}

TEST_CASE("interpolate_gaps: idempotent and never alters observed samples") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::optional<double>> vals;
        for (int i = 0; i < 50; ++i) {
            if (rng.uniform01() < 0.3)
                vals.push_back(std::nullopt);
            else
                vals.push_back(rng.uniform(60.0, 300.0));
        }
        Signal in = make_signal(vals);
        Signal once = interpolate_gaps(in);
        Signal twice = interpolate_gaps(once);
        CHECK(once.values == twice.values);
        CHECK(once.present == twice.present);
        for (std::size_t i = 0; i < in.length(); ++i)
            if (in.observed[i]) CHECK(once.values[i] == in.values[i]);
    }
}

namespace {

// One fully observed day plus a configurable missing stretch on the next.
Signal two_day_signal_with_gap(int gap_begin_slot, int gap_len) {
    std::vector<std::optional<double>> vals(2 * 288, 120.0);
    for (int i = 0; i < gap_len; ++i) vals[gap_begin_slot + i] = std::nullopt;
    return make_signal(vals);
}

}  // namespace

TEST_CASE("segment_days: a 35-minute original gap excludes the day") {
    // Observations bound the missing run at 10:00 and 10:35 on day 0.
    Signal s = two_day_signal_with_gap(121, 6);  // 10:05 .. 10:30 missing
    auto res = segment_days(interpolate_gaps(s));
    REQUIRE(res.report.size() == 2);
    CHECK(res.report[0].longest_gap_minutes == doctest::Approx(35.0));
    CHECK(!res.report[0].kept);
    CHECK(res.report[1].kept);
    CHECK(res.segments.size() == 1);
}

TEST_CASE("segment_days: a 25-minute gap stays, interpolated") {
    Signal s = two_day_signal_with_gap(121, 4);  // 10:05 .. 10:20 missing
    auto res = segment_days(interpolate_gaps(s));
    CHECK(res.report[0].longest_gap_minutes == doctest::Approx(25.0));
    CHECK(res.report[0].kept);
    CHECK(res.segments.size() == 2);
    for (const auto& seg : res.segments) CHECK(seg.values.size() == 288);
}

TEST_CASE("segment_days: a gap straddling midnight is split per day") {
    // Missing 23:55 .. 00:35; bounding observations at 23:50 and 00:40.
    // Day 0 sees (23:50, 24:00) = 10 min, day 1 sees (24:00, 00:40) = 40 min.
    Signal s = two_day_signal_with_gap(287, 9);
    auto res = segment_days(interpolate_gaps(s));
    REQUIRE(res.report.size() == 2);
    CHECK(res.report[0].longest_gap_minutes == doctest::Approx(10.0));
    CHECK(res.report[0].kept);
    CHECK(res.report[1].longest_gap_minutes == doctest::Approx(40.0));
    CHECK(!res.report[1].kept);
    REQUIRE(res.segments.size() == 1);
    CHECK(res.segments[0].day_index == 17226);
}

TEST_CASE("segment_days: deterministic given (signal, max_gap)") {
    Signal s = two_day_signal_with_gap(100, 3);
    auto a = segment_days(interpolate_gaps(s));
    auto b = segment_days(interpolate_gaps(s));
    REQUIRE(a.segments.size() == b.segments.size());
    for (std::size_t i = 0; i < a.segments.size(); ++i)
        CHECK(a.segments[i].values == b.segments[i].values);
}

TEST_CASE("windows: counting") {
    DaySegment seg;
    seg.values.assign(288, 1.0);
    CHECK(windows(seg, 8, 8).size() == 36);
    CHECK(windows(seg, 288, 17).size() == 1);
    CHECK(windows(seg, 8, 1).size() == 281);
    CHECK_THROWS_AS(windows(seg, 289, 1), ValidationError);
}

TEST_CASE("windows: offsets increase and tile exactly when stride = l divides T") {
    DaySegment seg;
    for (int i = 0; i < 288; ++i) seg.values.push_back(i);
    auto w = windows(seg, 12, 12);
    CHECK(w.size() == 24);
    int expected = 0;
    for (const auto& sub : w) {
        CHECK(sub.offset == expected);
        CHECK(sub.values.front() == doctest::Approx(expected));
        expected += 12;
    }
    CHECK(expected == 288);
}

TEST_CASE("sax: a=2 splits at zero") {
    DaySegment seg;
    seg.values = {-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0};
    auto sym = sax_discretize(seg, 2, 2);
    CHECK(sym.symbols == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("sax: a=4 breakpoints match the normal quantiles to 1e-4") {
    auto cuts = sax_breakpoints(4);
    REQUIRE(cuts.size() == 3);
    CHECK(cuts[0] == doctest::Approx(-0.6745).epsilon(1e-4));
    CHECK(cuts[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    CHECK(cuts[2] == doctest::Approx(0.6745).epsilon(1e-4));
}

TEST_CASE("sax: breakpoints match the frozen cutpoint table for every alphabet size") {
    for (const auto& [a, expected] : oracles::sax_cutpoint_table()) {
        auto cuts = sax_breakpoints(a);
        REQUIRE(cuts.size() == expected.size());
        for (std::size_t i = 0; i < cuts.size(); ++i)
            CHECK(std::abs(cuts[i] - expected[i]) < 1e-4);
    }
}

TEST_CASE("sax: constant segment maps every symbol to floor(a/2)") {
    DaySegment seg;
    seg.values.assign(12, 7.5);
    for (int a : {2, 3, 5, 8}) {
        auto sym = sax_discretize(seg, a, 3);
        REQUIRE(sym.symbols.size() == 4);
        for (int v : sym.symbols) CHECK(v == a / 2);
    }
}

TEST_CASE("sax: invariant to positive affine transforms of the segment") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        DaySegment seg;
        for (int i = 0; i < 24; ++i) seg.values.push_back(rng.normal(120.0, 30.0));
        double scale = rng.uniform(0.1, 5.0);
        double shift = rng.uniform(-100.0, 100.0);
        DaySegment mapped;
        for (double v : seg.values) mapped.values.push_back(scale * v + shift);
        CHECK(sax_discretize(seg, 5, 3).symbols == sax_discretize(mapped, 5, 3).symbols);
    }
}

TEST_CASE("sax: alphabet and width validation") {
    DaySegment seg;
    seg.values.assign(12, 1.0);
    CHECK_THROWS_AS(sax_discretize(seg, 1, 3), ValidationError);
    CHECK_THROWS_AS(sax_discretize(seg, 21, 3), ValidationError);
    CHECK_THROWS_AS(sax_discretize(seg, 5, 0), ValidationError);
}
