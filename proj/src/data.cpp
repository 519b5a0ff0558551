#include "hiest/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hiest {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

// days-from-civil (proleptic Gregorian); avoids timezone machinery
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

struct ParsedStamp {
    int64_t epoch_seconds;
    int seconds_of_day;
};

std::optional<ParsedStamp> parse_timestamp(const std::string& s) {
    int y, mo, d, h, mi, se;
    char sep;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se) != 7)
        return std::nullopt;
    if (sep != ' ' && sep != 'T') return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        se < 0 || se > 60)
        return std::nullopt;
    ParsedStamp p;
    p.seconds_of_day = h * 3600 + mi * 60 + se;
    p.epoch_seconds = days_from_civil(y, mo, d) * 86400 + p.seconds_of_day;
    return p;
}

std::optional<double> parse_number(const std::string& cell) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return std::nullopt;
    while (*end == ' ') ++end;
    if (*end != '\0') return std::nullopt;
    return v;
}

bool is_blank(const std::string& cell) {
    return cell.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::vector<double> ReadingsFrame::missing_rates() const {
    std::vector<double> rates(num_sensors(), 0.0);
    for (std::size_t t = 0; t < num_steps(); ++t)
        for (std::size_t n = 0; n < num_sensors(); ++n)
            if (is_missing(t, n)) rates[n] += 1.0;
    for (double& r : rates) r /= std::max<std::size_t>(num_steps(), 1);
    return rates;
}

double ReadingsFrame::time_of_day(std::size_t t) const {
    auto p = parse_timestamp(timestamps[t]);
    return p ? static_cast<double>(p->seconds_of_day) / 86400.0 : 0.0;
}

ReadingsFrame load_readings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("load_readings: cannot open " + path);

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw FormatError("load_readings: empty file " + path);
    ++lineno;
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "timestamp")
        throw FormatError("load_readings: line 1: header must start with 'timestamp'");

    ReadingsFrame frame;
    frame.sensor_ids.assign(header.begin() + 1, header.end());
    const std::size_t n = frame.sensor_ids.size();

    int64_t prev_epoch = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != n + 1)
            throw FormatError("load_readings: line " + std::to_string(lineno) + ": expected " +
                              std::to_string(n + 1) + " cells, got " +
                              std::to_string(cells.size()));
        auto stamp = parse_timestamp(cells[0]);
        if (!stamp)
            throw FormatError("load_readings: line " + std::to_string(lineno) +
                              ": bad timestamp '" + cells[0] + "'");
        if (!frame.timestamps.empty()) {
            const int64_t delta = stamp->epoch_seconds - prev_epoch;
            if (delta <= 0)
                throw FormatError("load_readings: line " + std::to_string(lineno) +
                                  ": timestamps not strictly increasing");
            if (frame.interval_seconds == 0)
                frame.interval_seconds = delta;
            else if (delta != frame.interval_seconds)
                throw FormatError("load_readings: line " + std::to_string(lineno) +
                                  ": interval changed from " +
                                  std::to_string(frame.interval_seconds) + "s to " +
                                  std::to_string(delta) + "s");
        }
        prev_epoch = stamp->epoch_seconds;
        frame.timestamps.push_back(cells[0]);
        for (std::size_t c = 0; c < n; ++c) {
            if (is_blank(cells[c + 1])) {
                frame.values.push_back(0.0);  // placeholder, forward-filled below
                frame.missing.push_back(1);
            } else {
                auto v = parse_number(cells[c + 1]);
                if (!v)
                    throw FormatError("load_readings: line " + std::to_string(lineno) +
                                      ": bad numeric cell '" + cells[c + 1] + "'");
                frame.values.push_back(*v);
                frame.missing.push_back(0);
            }
        }
    }
    if (frame.timestamps.empty())
        throw FormatError("load_readings: no data rows in " + path);

    // forward-fill missing cells; leading gaps take the first observed value
    const std::size_t t_total = frame.num_steps();
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t first_valid = t_total;
        for (std::size_t t = 0; t < t_total; ++t)
            if (!frame.is_missing(t, s)) {
                first_valid = t;
                break;
            }
        if (first_valid == t_total) continue;  // whole column missing, stays 0
        double last = frame.value(first_valid, s);
        for (std::size_t t = 0; t < t_total; ++t) {
            if (frame.is_missing(t, s))
                frame.values[t * n + s] = last;
            else
                last = frame.value(t, s);
        }
    }
    return frame;
}

void write_readings(const ReadingsFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_readings: cannot open " + path);
    out << "timestamp";
    for (const auto& id : frame.sensor_ids) out << ',' << id;
    out << '\n';
    out.precision(17);
    const std::size_t n = frame.num_sensors();
    for (std::size_t t = 0; t < frame.num_steps(); ++t) {
        out << frame.timestamps[t];
        for (std::size_t s = 0; s < n; ++s) {
            out << ',';
            if (!frame.is_missing(t, s)) out << frame.value(t, s);
        }
        out << '\n';
    }
}

std::vector<DistanceRecord> load_distances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("load_distances: cannot open " + path);
    std::vector<DistanceRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 3)
            throw FormatError("load_distances: line " + std::to_string(lineno) +
                              ": expected 3 cells, got " + std::to_string(cells.size()));
        auto v = parse_number(cells[2]);
        if (!v) {
            if (lineno == 1) continue;  // header row
            throw FormatError("load_distances: line " + std::to_string(lineno) +
                              ": bad distance '" + cells[2] + "'");
        }
        if (*v < 0.0)
            throw FormatError("load_distances: line " + std::to_string(lineno) +
                              ": negative distance");
        records.push_back({cells[0], cells[1], *v});
    }
    if (records.empty()) throw FormatError("load_distances: no distance rows in " + path);
    return records;
}

void write_distances(const std::vector<DistanceRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_distances: cannot open " + path);
    out << "from_id,to_id,distance\n";
    out.precision(17);
    for (const auto& r : records) out << r.from << ',' << r.to << ',' << r.meters << '\n';
}

std::vector<std::string> collect_node_ids(const std::vector<DistanceRecord>& records) {
    std::vector<std::string> ids;
    std::map<std::string, bool> seen;
    for (const auto& r : records) {
        if (!seen.count(r.from)) {
            seen[r.from] = true;
            ids.push_back(r.from);
        }
        if (!seen.count(r.to)) {
            seen[r.to] = true;
            ids.push_back(r.to);
        }
    }
    return ids;
}

std::vector<DistanceEntry> index_distances(const std::vector<DistanceRecord>& records,
                                           const std::vector<std::string>& node_ids) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < node_ids.size(); ++i) index[node_ids[i]] = i;
    std::vector<DistanceEntry> out;
    out.reserve(records.size());
    auto find_id = [&](const std::string& id) -> std::size_t {
        auto it = index.find(id);
        if (it == index.end())
            throw DataError("index_distances: unknown sensor id '" + id + "'");
        return it->second;
    };
    for (const auto& r : records) out.push_back({find_id(r.from), find_id(r.to), r.meters});
    return out;
}

WindowedData split_and_window(const ReadingsFrame& frame, double train_ratio,
                              double val_ratio, double test_ratio, std::size_t history,
                              std::size_t horizon) {
    if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw DataError("split_and_window: split ratios must sum to 1");
    if (train_ratio <= 0.0 || val_ratio < 0.0 || test_ratio < 0.0)
        throw DataError("split_and_window: ratios must be nonnegative with train > 0");
    const std::size_t t_total = frame.num_steps();
    const std::size_t window = history + horizon;
    if (t_total < window)
        throw DataError("split_and_window: " + std::to_string(t_total) +
                        " steps cannot fit one window of " + std::to_string(window));

    const auto n_train = static_cast<std::size_t>(train_ratio * static_cast<double>(t_total));
    const auto n_val = static_cast<std::size_t>(val_ratio * static_cast<double>(t_total));
    const std::size_t n_test = t_total - n_train - n_val;

    auto make_split = [&](const char* name, std::size_t begin, std::size_t len) {
        SplitWindows s;
        s.segment_begin = begin;
        s.segment_len = len;
        if (len > 0) {
            if (len < window)
                throw DataError(std::string("split_and_window: ") + name + " segment of " +
                                std::to_string(len) + " steps cannot fit one window of " +
                                std::to_string(window));
            for (std::size_t start = 0; start + window <= len; ++start)
                s.starts.push_back(begin + start);
        }
        return s;
    };

    WindowedData w;
    w.history = history;
    w.horizon = horizon;
    w.train = make_split("train", 0, n_train);
    w.val = make_split("validation", n_train, n_val);
    w.test = make_split("test", n_train + n_val, n_test);
    return w;
}

NormStats compute_norm_stats(const ReadingsFrame& frame, const SplitWindows& train) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    const std::size_t n = frame.num_sensors();
    for (std::size_t t = train.segment_begin; t < train.segment_begin + train.segment_len; ++t)
        for (std::size_t s = 0; s < n; ++s) {
            if (frame.is_missing(t, s)) continue;
            const double v = frame.value(t, s);
            sum += v;
            sum_sq += v * v;
            ++count;
        }
    if (count == 0) throw DataError("compute_norm_stats: train split has no observed values");
    NormStats st;
    st.mean = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - st.mean * st.mean;
    st.std_dev = std::sqrt(std::max(var, 0.0));
    if (st.std_dev <= 0.0)
        throw DataError("compute_norm_stats: train feature is constant, std is zero");
    return st;
}

ForecastBatch assemble_batch(const ReadingsFrame& frame, const NormStats& stats,
                             const std::vector<std::size_t>& window_starts,
                             std::size_t history, std::size_t horizon, bool time_features) {
    const std::size_t b = window_starts.size();
    const std::size_t n = frame.num_sensors();
    const std::size_t d_in = time_features ? 2 : 1;
    ForecastBatch batch;
    batch.x = Tensor::zeros({b, history, n, d_in});
    batch.y = Tensor::zeros({b, horizon, n, 1});
    batch.y_mask = Tensor::zeros({b, horizon, n, 1});
    auto xv = batch.x.mutable_data();
    auto yv = batch.y.mutable_data();
    auto mv = batch.y_mask.mutable_data();
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t start = window_starts[i];
        for (std::size_t h = 0; h < history; ++h) {
            const std::size_t t = start + h;
            const double tod = time_features ? frame.time_of_day(t) : 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t base = ((i * history + h) * n + s) * d_in;
                xv[base] = (frame.value(t, s) - stats.mean) / stats.std_dev;
                if (time_features) xv[base + 1] = tod;
            }
        }
        for (std::size_t h = 0; h < horizon; ++h) {
            const std::size_t t = start + history + h;
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t base = (i * horizon + h) * n + s;
                yv[base] = frame.value(t, s);
                mv[base] = frame.is_missing(t, s) ? 0.0 : 1.0;
            }
        }
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

SynthResult synth_hierarchical(const SynthSpec& spec) {
    if (spec.n_regions < 2 || spec.nodes_per_region < 2 || spec.t_total < 2)
        throw DataError("synth_hierarchical: counts must be at least 2");
    if (spec.n_patterns < 1)
        throw DataError("synth_hierarchical: need at least one pattern");

    std::mt19937_64 rng(spec.seed);
    const std::size_t m = spec.nodes_per_region;
    const std::size_t n = spec.n_regions * m;

    SynthResult out;
    for (std::size_t i = 0; i < n; ++i) out.truth.region_of_node.push_back(i / m);

    // ---- topology: rings joined through shared cut vertices ----
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    auto add_edge = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        auto e = std::minmax(a, b);
        if (std::find(edges.begin(), edges.end(), std::make_pair(e.first, e.second)) ==
            edges.end())
            edges.emplace_back(e.first, e.second);
    };
    for (std::size_t r = 0; r < spec.n_regions; ++r) {
        const std::size_t base = r * m;
        for (std::size_t i = 0; i < m; ++i) add_edge(base + i, base + (i + 1) % m);
        if (m >= 5) add_edge(base, base + m / 2);  // chord for texture
        if (r + 1 < spec.n_regions) {
            // last node of region r joins region r+1's ring as a cut vertex
            const std::size_t cut = base + m - 1;
            add_edge(cut, (r + 1) * m);
            add_edge(cut, (r + 1) * m + 1);
            out.truth.cut_vertex_ids.push_back("s" + std::to_string(cut));
        }
    }

    // ---- distances: edges close, non-edges far, all pairs listed ----
    std::uniform_real_distribution<double> near(50.0, 150.0);
    std::uniform_real_distribution<double> far(800.0, 1200.0);
    std::vector<std::string> node_ids;
    for (std::size_t i = 0; i < n; ++i) node_ids.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool is_edge =
                std::find(edges.begin(), edges.end(), std::make_pair(i, j)) != edges.end();
            out.distances.push_back({node_ids[i], node_ids[j], is_edge ? near(rng) : far(rng)});
        }
    out.graph = build_adjacency(index_distances(out.distances, node_ids), node_ids, 0.1);

    // ---- temporal archetypes ----
    struct Archetype {
        double a1, p1, phi1, a2, p2, phi2;
    };
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Archetype> archetypes;
    for (std::size_t p = 0; p < spec.n_patterns; ++p) {
        Archetype a;
        a.a1 = 6.0 + 4.0 * u01(rng);
        a.p1 = 18.0 + 12.0 * u01(rng);
        a.phi1 = 2.0 * M_PI * u01(rng);
        a.a2 = 3.0 + 3.0 * u01(rng);
        a.p2 = 40.0 + 30.0 * u01(rng);
        a.phi2 = 2.0 * M_PI * u01(rng);
        archetypes.push_back(a);
    }
    for (std::size_t r = 0; r < spec.n_regions; ++r)
        out.truth.pattern_of_region.push_back(r % spec.n_patterns);

    // ---- series: region archetype + iid noise ----
    out.frame.sensor_ids = node_ids;
    out.frame.interval_seconds = 300;
    out.frame.values.assign(spec.t_total * n, 0.0);
    out.frame.missing.assign(spec.t_total * n, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int64_t t0 = 1704067200;  // 2024-01-01 00:00:00
    for (std::size_t t = 0; t < spec.t_total; ++t) {
        const int64_t epoch = t0 + static_cast<int64_t>(t) * 300;
        const int64_t days = epoch / 86400;
        const int64_t rem = epoch - days * 86400;
        char buf[48];
        // render back to civil date (inverse of days_from_civil)
        {
            int64_t z = days + 719468;
            const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
            const unsigned doe = static_cast<unsigned>(z - era * 146097);
            const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
            const int64_t y = static_cast<int64_t>(yoe) + era * 400;
            const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
            const unsigned mp = (5 * doy + 2) / 153;
            const unsigned d = doy - (153 * mp + 2) / 5 + 1;
            const unsigned mo = mp + (mp < 10 ? 3 : -9);
            std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld",
                          static_cast<long long>(y + (mo <= 2)), mo, d,
                          static_cast<long long>(rem / 3600),
                          static_cast<long long>((rem / 60) % 60),
                          static_cast<long long>(rem % 60));
        }
        out.frame.timestamps.emplace_back(buf);
        for (std::size_t s = 0; s < n; ++s) {
            const auto& a = archetypes[out.truth.pattern_of_region[s / m]];
            double v = 50.0 + a.a1 * std::sin(2.0 * M_PI * t / a.p1 + a.phi1) +
                       a.a2 * std::sin(2.0 * M_PI * t / a.p2 + a.phi2);
            v += spec.noise_sigma * gauss(rng);
            out.frame.values[t * n + s] = v;
        }
    }
    return out;
}

void write_planted_truth(const SynthResult& result, const std::string& path) {
    nlohmann::json j;
    j["region_of_node"] = nlohmann::json::object();
    for (std::size_t i = 0; i < result.truth.region_of_node.size(); ++i)
        j["region_of_node"][result.graph.node_ids[i]] = result.truth.region_of_node[i];
    j["pattern_of_region"] = result.truth.pattern_of_region;
    j["cut_vertices"] = result.truth.cut_vertex_ids;
    j["n_regions"] = result.truth.pattern_of_region.size();
    std::ofstream out(path);
    if (!out) throw DataError("write_planted_truth: cannot open " + path);
    out << j.dump(2) << '\n';
}

}  // namespace hiest
