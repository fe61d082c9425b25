#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mforge::signal {

/// One sensor session on a uniform sample grid. A sample can be observed
/// (came from the input), interpolated (filled between observations), or
/// missing. Missing samples are flagged, never dropped or encoded as a
/// sentinel value.
struct Signal {
    std::string patient_id;
    std::string session_id;
    std::int64_t start_time = 0;  // unix seconds, UTC; multiple of sample_period
    int sample_period = 300;      // seconds
    std::vector<double> values;   // meaningful where present[i]
    std::vector<char> present;    // sample currently carries a value
    std::vector<char> observed;   // sample was observed at load; never altered

    std::size_t length() const { return values.size(); }
    std::int64_t sample_time(std::size_t i) const {
        return start_time + static_cast<std::int64_t>(i) * sample_period;
    }
};

/// One fully observed calendar day, the unit of featurization.
struct DaySegment {
    std::string patient_id;
    std::int64_t day_index = 0;  // days since the unix epoch
    std::vector<double> values;
};

struct Subsequence {
    std::size_t segment_index = 0;
    int offset = 0;
    std::vector<double> values;
};

struct SymbolSequence {
    std::vector<int> symbols;
    int alphabet_size = 0;
    int paa_width = 0;
};

struct LoadOptions {
    int sample_period = 300;
    double value_min = 40.0;
    double value_max = 400.0;
    // "auto" picks by file extension (.json vs anything else -> csv).
    std::string format = "auto";
};

/// Parses "YYYY-MM-DDTHH:MM:SS" (also accepts a space separator and a
/// trailing 'Z') as UTC into unix seconds.
std::int64_t parse_iso8601(const std::string& s);
std::string format_iso8601(std::int64_t t);

/// Loads one Signal per (patient, session). CSV schema: header
/// `patient_id,session_id,timestamp,value`, rows time-ordered per session,
/// blank value = gap. JSON alternative: array of session objects with a
/// `values` array using null for gaps. Skipped grid rows become gaps;
/// out-of-range values are an error naming the row.
std::vector<Signal> load_signals(const std::string& path, const LoadOptions& opts = {});

/// Fills every interior gap with the linear interpolant between its bounding
/// observations. Leading/trailing gaps of the session stay missing. Observed
/// samples are never altered; idempotent.
Signal interpolate_gaps(const Signal& s);

struct DayReport {
    std::string patient_id;
    std::int64_t day_index = 0;
    double longest_gap_minutes = 0.0;
    bool kept = false;
};

struct SegmentationResult {
    std::vector<DaySegment> segments;
    std::vector<DayReport> report;
};

/// Splits an interpolated signal into calendar days, keeping a day only if
/// its longest original missing period is <= max_gap_seconds and every
/// sample in the day is present. A missing period is measured as the open
/// interval between the observations bounding it (clipped to the day for
/// periods straddling midnight); time outside the session's coverage counts
/// as missing.
SegmentationResult segment_days(const Signal& s, int max_gap_seconds = 1800);

/// Sliding subsequences at offsets 0, stride, 2*stride, ...
std::vector<Subsequence> windows(const DaySegment& seg, int length, int stride,
                                 std::size_t segment_index = 0);

/// The a-1 standard-normal quantiles at probabilities i/a.
std::vector<double> sax_breakpoints(int alphabet_size);

/// SAX encoding of raw values: per-window z-normalization, piecewise
/// aggregate means over blocks of paa_width samples, then quantile binning.
/// A constant input maps every symbol to floor(a/2).
SymbolSequence sax_encode(const std::vector<double>& values, int alphabet_size, int paa_width);

SymbolSequence sax_discretize(const DaySegment& seg, int alphabet_size, int paa_width);

}  // namespace mforge::signal
