#include "mforge/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mforge/errors.hpp"
#include "mforge/numerics.hpp"

namespace mforge::signal {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// Days from civil date, Howard Hinnant's algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

struct Row {
    std::size_t line_number;
    std::int64_t timestamp;
    bool has_value;
    double value;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

Signal build_signal(const std::string& patient, const std::string& session,
                    std::vector<Row> rows, const LoadOptions& opts) {
    Signal s;
    s.patient_id = patient;
    s.session_id = session;
    s.sample_period = opts.sample_period;

    const std::int64_t first = rows.front().timestamp;
    if (first % opts.sample_period != 0)
        throw ValidationError("line " + std::to_string(rows.front().line_number) +
                              ": timestamp not aligned to the sample period grid");
    bool first_row = true;
    std::int64_t prev = 0;
    for (const Row& r : rows) {
        if (!first_row && r.timestamp <= prev)
            throw ValidationError("line " + std::to_string(r.line_number) +
                                  ": non-monotone timestamp for patient " + patient +
                                  " session " + session);
        first_row = false;
        prev = r.timestamp;
        if ((r.timestamp - first) % opts.sample_period != 0)
            throw ValidationError("line " + std::to_string(r.line_number) +
                                  ": timestamp not aligned to the sample period grid");
    }

    s.start_time = first;
    const std::size_t n =
        static_cast<std::size_t>((rows.back().timestamp - first) / opts.sample_period) + 1;
    s.values.assign(n, 0.0);
    s.present.assign(n, 0);
    s.observed.assign(n, 0);
    for (const Row& r : rows) {
        if (!r.has_value) continue;  // explicit gap row
        auto i = static_cast<std::size_t>((r.timestamp - first) / opts.sample_period);
        s.values[i] = r.value;
        s.present[i] = 1;
        s.observed[i] = 1;
    }
    return s;
}

std::vector<Signal> load_csv(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open input file: " + path);

    std::string line;
    std::size_t line_number = 0;
    bool saw_header = false;
    // Keyed by (patient, session), first-seen order preserved separately.
    std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;
    std::vector<std::pair<std::string, std::string>> order;

    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "patient_id,session_id,timestamp,value")
                throw ValidationError(path + ": expected header patient_id,session_id,timestamp,value");
            saw_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ValidationError("line " + std::to_string(line_number) + ": expected 4 fields");
        Row r;
        r.line_number = line_number;
        r.timestamp = parse_iso8601(fields[2]);
        r.has_value = !fields[3].empty();
        r.value = 0.0;
        if (r.has_value) {
            std::size_t pos = 0;
            r.value = std::stod(fields[3], &pos);
            if (pos != fields[3].size())
                throw ValidationError("line " + std::to_string(line_number) +
                                      ": malformed value '" + fields[3] + "'");
            if (r.value < opts.value_min || r.value > opts.value_max) {
                std::ostringstream msg;
                msg << "line " << line_number << ": value " << r.value
                    << " outside sensor range [" << opts.value_min << ", " << opts.value_max
                    << "]";
                throw ValidationError(msg.str());
            }
        }
        auto key = std::make_pair(fields[0], fields[1]);
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(r);
    }

    std::vector<Signal> out;
    out.reserve(order.size());
    for (const auto& key : order)
        out.push_back(build_signal(key.first, key.second, groups[key], opts));
    return out;
}

std::vector<Signal> load_json(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open input file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
    if (doc.is_object()) doc = nlohmann::json::array({doc});
    if (!doc.is_array()) throw ValidationError(path + ": expected a session object or array");

    std::vector<Signal> out;
    for (std::size_t si = 0; si < doc.size(); ++si) {
        const auto& obj = doc[si];
        Signal s;
        s.patient_id = obj.at("patient_id").get<std::string>();
        s.session_id = obj.at("session_id").get<std::string>();
        s.sample_period = obj.value("sample_period", opts.sample_period);
        const auto& start = obj.at("start_time");
        s.start_time = start.is_string() ? parse_iso8601(start.get<std::string>())
                                         : start.get<std::int64_t>();
        if (s.start_time % s.sample_period != 0)
            throw ValidationError("session " + s.session_id +
                                  ": start_time not aligned to the sample period grid");
        const auto& vals = obj.at("values");
        s.values.assign(vals.size(), 0.0);
        s.present.assign(vals.size(), 0);
        s.observed.assign(vals.size(), 0);
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (vals[i].is_null()) continue;
            double v = vals[i].get<double>();
            if (v < opts.value_min || v > opts.value_max) {
                std::ostringstream msg;
                msg << "session " << s.session_id << " value index " << i << ": value " << v
                    << " outside sensor range [" << opts.value_min << ", " << opts.value_max
                    << "]";
                throw ValidationError(msg.str());
            }
            s.values[i] = v;
            s.present[i] = 1;
            s.observed[i] = 1;
        }
        if (!s.values.empty()) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h, mi, se;
    char sep;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se) != 7 ||
        (sep != 'T' && sep != ' '))
        throw ValidationError("malformed ISO-8601 timestamp: '" + s + "'");
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + se;
}

std::string format_iso8601(std::int64_t t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

std::vector<Signal> load_signals(const std::string& path, const LoadOptions& opts) {
    if (opts.sample_period <= 0 || kSecondsPerDay % opts.sample_period != 0)
        throw ValidationError("sample_period must be positive and divide 86400 seconds");
    bool json = opts.format == "json" ||
                (opts.format == "auto" && path.size() >= 5 &&
                 path.compare(path.size() - 5, 5, ".json") == 0);
    return json ? load_json(path, opts) : load_csv(path, opts);
}

Signal interpolate_gaps(const Signal& s) {
    Signal out = s;
    const std::size_t n = out.length();
    std::size_t i = 0;
    while (i < n) {
        if (out.present[i]) {
            ++i;
            continue;
        }
        std::size_t run_begin = i;
        while (i < n && !out.present[i]) ++i;
        std::size_t run_end = i;  // one past
        if (run_begin == 0 || run_end == n) continue;  // leading/trailing: no extrapolation
        double left = out.values[run_begin - 1];
        double right = out.values[run_end];
        double span = static_cast<double>(run_end - (run_begin - 1));
        for (std::size_t j = run_begin; j < run_end; ++j) {
            double frac = static_cast<double>(j - (run_begin - 1)) / span;
            out.values[j] = left + (right - left) * frac;
            out.present[j] = 1;
        }
    }
    return out;
}

SegmentationResult segment_days(const Signal& s, int max_gap_seconds) {
    SegmentationResult result;
    const std::size_t n = s.length();
    if (n == 0) return result;
    if (kSecondsPerDay % s.sample_period != 0)
        throw ValidationError("sample_period must divide 86400 seconds");
    const std::size_t t_day = static_cast<std::size_t>(kSecondsPerDay / s.sample_period);

    // Missing periods in absolute seconds, as half-open intervals. Interior
    // runs span (previous observation, next observation); session coverage is
    // [start, last sample + period).
    const std::int64_t coverage_begin = s.start_time;
    const std::int64_t coverage_end = s.sample_time(n - 1) + s.sample_period;
    std::vector<std::pair<std::int64_t, std::int64_t>> gaps;
    {
        std::size_t i = 0;
        while (i < n) {
            if (s.observed[i]) {
                ++i;
                continue;
            }
            std::size_t b = i;
            while (i < n && !s.observed[i]) ++i;
            std::int64_t lo = (b == 0) ? coverage_begin : s.sample_time(b - 1);
            std::int64_t hi = (i == n) ? coverage_end : s.sample_time(i);
            gaps.emplace_back(lo, hi);
        }
    }

    const std::int64_t first_day = coverage_begin / kSecondsPerDay;
    const std::int64_t last_day = (coverage_end - 1) / kSecondsPerDay;
    for (std::int64_t day = first_day; day <= last_day; ++day) {
        const std::int64_t day_begin = day * kSecondsPerDay;
        const std::int64_t day_end = day_begin + kSecondsPerDay;

        std::int64_t longest = 0;
        // Uncovered head/tail of the day count as missing periods.
        if (coverage_begin > day_begin)
            longest = std::max(longest, std::min(coverage_begin, day_end) - day_begin);
        if (coverage_end < day_end)
            longest = std::max(longest, day_end - std::max(coverage_end, day_begin));
        for (const auto& [lo, hi] : gaps) {
            std::int64_t clipped = std::min(hi, day_end) - std::max(lo, day_begin);
            longest = std::max(longest, clipped);
        }

        bool kept = longest <= max_gap_seconds;
        DaySegment seg;
        if (kept) {
            seg.patient_id = s.patient_id;
            seg.day_index = day;
            seg.values.reserve(t_day);
            for (std::size_t slot = 0; slot < t_day; ++slot) {
                std::int64_t t = day_begin + static_cast<std::int64_t>(slot) * s.sample_period;
                std::int64_t idx = (t - s.start_time) / s.sample_period;
                if (t < coverage_begin || idx < 0 || idx >= static_cast<std::int64_t>(n) ||
                    !s.present[static_cast<std::size_t>(idx)]) {
                    kept = false;  // still missing after interpolation
                    break;
                }
                seg.values.push_back(s.values[static_cast<std::size_t>(idx)]);
            }
        }
        result.report.push_back(
            {s.patient_id, day, static_cast<double>(longest) / 60.0, kept});
        if (kept) result.segments.push_back(std::move(seg));
    }
    return result;
}

std::vector<Subsequence> windows(const DaySegment& seg, int length, int stride,
                                 std::size_t segment_index) {
    const int t = static_cast<int>(seg.values.size());
    if (length < 1) throw ValidationError("window length must be positive");
    if (length > t) throw ValidationError("window length exceeds segment length");
    if (stride < 1) throw ValidationError("stride must be positive");
    std::vector<Subsequence> out;
    out.reserve(static_cast<std::size_t>((t - length) / stride) + 1);
    for (int off = 0; off + length <= t; off += stride) {
        Subsequence s;
        s.segment_index = segment_index;
        s.offset = off;
        s.values.assign(seg.values.begin() + off, seg.values.begin() + off + length);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> sax_breakpoints(int alphabet_size) {
    if (alphabet_size < 2 || alphabet_size > 20)
        throw ValidationError("SAX alphabet size must lie in [2, 20]");
    std::vector<double> cuts;
    cuts.reserve(static_cast<std::size_t>(alphabet_size - 1));
    for (int i = 1; i < alphabet_size; ++i)
        cuts.push_back(inv_normal_cdf(static_cast<double>(i) / alphabet_size));
    return cuts;
}

SymbolSequence sax_encode(const std::vector<double>& values, int alphabet_size, int paa_width) {
    if (paa_width < 1) throw ValidationError("SAX paa width must be positive");
    std::vector<double> cuts = sax_breakpoints(alphabet_size);

    SymbolSequence seq;
    seq.alphabet_size = alphabet_size;
    seq.paa_width = paa_width;
    const std::size_t blocks = values.size() / static_cast<std::size_t>(paa_width);
    seq.symbols.reserve(blocks);

    auto [mean, var] = mean_variance(values);
    if (var <= 0.0) {
        seq.symbols.assign(blocks, alphabet_size / 2);
        return seq;
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    for (std::size_t b = 0; b < blocks; ++b) {
        double sum = 0.0;
        for (int k = 0; k < paa_width; ++k)
            sum += (values[b * paa_width + k] - mean) * inv_sd;
        double paa = sum / paa_width;
        int sym = 0;
        while (sym < alphabet_size - 1 && !(paa < cuts[sym])) ++sym;
        seq.symbols.push_back(sym);
    }
    return seq;
}

SymbolSequence sax_discretize(const DaySegment& seg, int alphabet_size, int paa_width) {
    return sax_encode(seg.values, alphabet_size, paa_width);
}

}  // namespace mforge::signal
