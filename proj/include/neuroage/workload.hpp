#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "neuroage/hw.hpp"
#include "neuroage/rng.hpp"
#include "neuroage/types.hpp"

namespace neuroage {

using SpikeEvent = AerEvent;

// A recorded or generated spike workload. The text form is line-oriented:
// '#'-prefixed key=value header lines, then one "time_seconds,tile,neuron"
// event per line, sorted by (time, tile, neuron).
struct SpikeTrace {
    std::string trace_id;                 // optional
    std::string chip_hash;                // optional, fingerprint of the geometry
    std::optional<SimTime> duration;      // optional, run horizon
    std::vector<std::string> annotations; // "# destress=..." lines on event logs
    std::vector<SpikeEvent> events;

    SimTime end_time() const { return events.empty() ? 0 : events.back().time; }

    // Horizon used for rate math and policy schedules: the declared duration
    // when present, otherwise the last event time.
    SimTime horizon() const { return duration.value_or(end_time()); }

    void validate_against(const ChipConfig& chip) const {
        for (const SpikeEvent& e : events)
            if (!chip.contains(e.tile, e.neuron))
                throw ConfigError("trace event (tile " + std::to_string(e.tile) + ", neuron " +
                                  std::to_string(e.neuron) + ") outside chip bounds");
    }
};

namespace detail {

inline std::uint32_t parse_id(std::string_view field, const char* what, std::size_t line) {
    std::uint32_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(std::string("invalid ") + what + " id '" + std::string(field) + "'", line);
    return value;
}

}  // namespace detail

inline SpikeTrace parse_trace(std::string_view text) {
    SpikeTrace trace;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (line.front() == '#') {
            std::string_view body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ParseError("header line is not key=value: '" + std::string(line) + "'", line_no);
            const std::string_view key = body.substr(0, eq);
            const std::string_view value = body.substr(eq + 1);
            if (key == "unit") {
                if (value != "seconds")
                    throw ParseError("unsupported time unit '" + std::string(value) + "'", line_no);
            } else if (key == "trace") {
                trace.trace_id = std::string(value);
            } else if (key == "chip") {
                trace.chip_hash = std::string(value);
            } else if (key == "duration") {
                trace.duration = parse_seconds(value, line_no);
                if (*trace.duration < 0) throw ParseError("negative duration", line_no);
            } else if (key == "destress") {
                trace.annotations.push_back(std::string(value));
            } else {
                throw ParseError("unknown header key '" + std::string(key) + "'", line_no);
            }
            continue;
        }

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string_view::npos ? std::string_view::npos
                                                            : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw ParseError("expected 'time,tile,neuron', got '" + std::string(line) + "'", line_no);

        SpikeEvent event;
        event.time = parse_seconds(line.substr(0, c1), line_no);
        if (event.time < 0) throw ParseError("negative spike time", line_no);
        event.tile = detail::parse_id(line.substr(c1 + 1, c2 - c1 - 1), "tile", line_no);
        event.neuron = detail::parse_id(line.substr(c2 + 1), "neuron", line_no);

        if (!trace.events.empty()) {
            const SpikeEvent& prev = trace.events.back();
            if (aer_order(event, prev))
                throw ParseError("events out of order (time regression or tie-break violation)",
                                 line_no);
            if (event == prev) throw ParseError("duplicate event", line_no);
        }
        trace.events.push_back(event);
    }
    if (trace.duration && *trace.duration < trace.end_time())
        throw ParseError("declared duration precedes the last event");
    return trace;
}

// Canonical emission; parse(emit(t)) reproduces t byte-for-byte.
inline std::string emit_trace(const SpikeTrace& trace) {
    std::string out = "# unit=seconds\n";
    if (!trace.trace_id.empty()) out += "# trace=" + trace.trace_id + "\n";
    if (!trace.chip_hash.empty()) out += "# chip=" + trace.chip_hash + "\n";
    if (trace.duration) out += "# duration=" + format_seconds(*trace.duration) + "\n";
    for (const std::string& a : trace.annotations) out += "# destress=" + a + "\n";
    for (const SpikeEvent& e : trace.events) {
        out += format_seconds(e.time);
        out += ',';
        out += std::to_string(e.tile);
        out += ',';
        out += std::to_string(e.neuron);
        out += '\n';
    }
    return out;
}

inline SpikeTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str());
}

inline void save_trace(const SpikeTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file: " + path);
    out << emit_trace(trace);
}

// Per-neuron firing-rate table for synthetic workloads: an explicit table,
// one shared constant rate, or rates drawn uniformly per neuron.
struct RateSpec {
    enum class Kind { PerNeuron, Constant, Uniform };
    Kind kind = Kind::Constant;
    std::vector<double> per_neuron;  // [Hz], indexed by global neuron
    double constant = 50.0;          // [Hz]
    double min = 1.0, max = 100.0;   // [Hz], uniform draw bounds

    void validate(std::uint64_t total_neurons) const {
        switch (kind) {
            case Kind::PerNeuron:
                if (per_neuron.size() != total_neurons)
                    throw ConfigError("rate table size does not match chip neuron count");
                for (double r : per_neuron)
                    if (!(r >= 0)) throw ConfigError("rates must be >= 0");
                break;
            case Kind::Constant:
                if (!(constant >= 0)) throw ConfigError("rate must be >= 0");
                break;
            case Kind::Uniform:
                if (!(min >= 0) || !(max >= min)) throw ConfigError("need 0 <= min <= max");
                break;
        }
    }
};

struct PoissonWorkloadSpec {
    double duration = 60.0;  // [s]
    std::uint64_t seed = 0;
    RateSpec rates;

    void validate(const ChipConfig& chip) const {
        if (!(duration > 0)) throw ConfigError("workload duration must be > 0");
        rates.validate(chip.total_neurons());
    }
};

inline double neuron_rate(const PoissonWorkloadSpec& spec, const CounterRng& rng,
                          std::uint64_t global_neuron) {
    switch (spec.rates.kind) {
        case RateSpec::Kind::PerNeuron:
            return spec.rates.per_neuron[global_neuron];
        case RateSpec::Kind::Constant:
            return spec.rates.constant;
        case RateSpec::Kind::Uniform:
            return spec.rates.min + (spec.rates.max - spec.rates.min) *
                                        rng.uniform(2 * global_neuron + 1, 0);
    }
    return 0.0;
}

// Homogeneous Poisson process per neuron, inter-arrivals by inverse CDF.
// A pure function of the spec: the k-th gap of neuron g depends only on
// (seed, g, k).
inline SpikeTrace generate_poisson(const PoissonWorkloadSpec& spec, const ChipConfig& chip) {
    spec.validate(chip);
    const CounterRng rng{spec.seed};
    const SimTime duration_ns = seconds_to_ns(spec.duration);

    SpikeTrace trace;
    trace.duration = duration_ns;
    for (std::uint64_t g = 0; g < chip.total_neurons(); ++g) {
        const double rate = neuron_rate(spec, rng, g);
        if (rate <= 0) continue;
        const auto tile = static_cast<TileId>(g / chip.neurons_per_tile);
        const auto neuron = static_cast<NeuronId>(g % chip.neurons_per_tile);
        double t = 0.0;
        SimTime prev_ns = -1;
        for (std::uint64_t k = 0;; ++k) {
            t += -std::log(rng.uniform(2 * g, k)) / rate;
            if (t >= spec.duration) break;
            SimTime ns = std::max<SimTime>(seconds_to_ns(t), prev_ns + 1);
            if (ns >= duration_ns) break;
            trace.events.push_back({ns, tile, neuron});
            prev_ns = ns;
        }
    }
    std::sort(trace.events.begin(), trace.events.end(), aer_order);
    return trace;
}

struct NeuronStat {
    TileId tile = 0;
    NeuronId neuron = 0;
    std::uint64_t count = 0;
    double rate_min = 0;  // [Hz] over observation windows
    double rate_avg = 0;  // [Hz] over the whole horizon
    double rate_max = 0;  // [Hz] over observation windows
};

struct TraceStats {
    std::vector<NeuronStat> per_neuron;  // neurons with at least one spike
    // Across neurons, of the per-neuron average rates.
    double rate_min = 0, rate_avg = 0, rate_max = 0;
    std::vector<double> bin_edges;          // [Hz]
    std::vector<std::uint64_t> histogram;   // neuron counts per rate bin
};

// Rates over the trace horizon; per-neuron min/max come from fixed-width
// observation windows (num_windows of them), and the histogram buckets the
// per-neuron average rates.
inline TraceStats trace_stats(const SpikeTrace& trace, std::uint32_t num_windows = 10,
                              std::vector<double> bin_edges = {}) {
    TraceStats stats;
    if (trace.events.empty()) return stats;
    if (num_windows < 1) throw std::domain_error("trace_stats: need >= 1 window");

    const SimTime horizon = std::max<SimTime>(trace.horizon(), 1);
    const double horizon_s = ns_to_seconds(horizon);
    const double window_s = horizon_s / num_windows;

    struct Acc {
        TileId tile;
        NeuronId neuron;
        std::uint64_t count = 0;
        std::uint32_t cur_window = 0;
        std::uint64_t cur_count = 0;
        std::uint32_t windows_seen = 0;
        double win_min = std::numeric_limits<double>::infinity();
        double win_max = 0;
    };
    std::vector<Acc> accs;
    std::unordered_map<std::uint64_t, std::size_t> index;

    auto slot = [&](TileId tile, NeuronId neuron) -> Acc& {
        const std::uint64_t key = (static_cast<std::uint64_t>(tile) << 32) | neuron;
        auto [it, inserted] = index.emplace(key, accs.size());
        if (inserted) accs.push_back(Acc{tile, neuron});
        return accs[it->second];
    };

    auto close_window = [&](Acc& a) {
        const double rate = static_cast<double>(a.cur_count) / window_s;
        a.win_min = std::min(a.win_min, rate);
        a.win_max = std::max(a.win_max, rate);
        ++a.windows_seen;
        a.cur_count = 0;
    };

    for (const SpikeEvent& e : trace.events) {
        Acc& a = slot(e.tile, e.neuron);
        auto w = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(static_cast<std::uint64_t>(e.time) * num_windows / horizon,
                                    num_windows - 1));
        if (a.count > 0 && w != a.cur_window) close_window(a);
        a.cur_window = w;
        ++a.cur_count;
        ++a.count;
    }

    double sum_rates = 0;
    stats.rate_min = std::numeric_limits<double>::infinity();
    for (Acc& a : accs) {
        close_window(a);
        if (a.windows_seen < num_windows) a.win_min = 0;  // some window was empty
        NeuronStat ns;
        ns.tile = a.tile;
        ns.neuron = a.neuron;
        ns.count = a.count;
        ns.rate_avg = static_cast<double>(a.count) / horizon_s;
        ns.rate_min = a.win_min;
        ns.rate_max = a.win_max;
        stats.per_neuron.push_back(ns);
        sum_rates += ns.rate_avg;
        stats.rate_min = std::min(stats.rate_min, ns.rate_avg);
        stats.rate_max = std::max(stats.rate_max, ns.rate_avg);
    }
    std::sort(stats.per_neuron.begin(), stats.per_neuron.end(),
              [](const NeuronStat& a, const NeuronStat& b) {
                  return a.tile != b.tile ? a.tile < b.tile : a.neuron < b.neuron;
              });
    stats.rate_avg = sum_rates / static_cast<double>(accs.size());

    if (bin_edges.empty()) {
        const double top = std::max(stats.rate_max, 1.0);
        for (int i = 0; i <= 10; ++i) bin_edges.push_back(top * i / 10.0);
    }
    stats.bin_edges = bin_edges;
    stats.histogram.assign(stats.bin_edges.size() - 1, 0);
    for (const NeuronStat& ns : stats.per_neuron) {
        for (std::size_t b = 0; b + 1 < stats.bin_edges.size(); ++b) {
            const bool last = b + 2 == stats.bin_edges.size();
            if (ns.rate_avg >= stats.bin_edges[b] &&
                (ns.rate_avg < stats.bin_edges[b + 1] || (last && ns.rate_avg <= stats.bin_edges[b + 1]))) {
                ++stats.histogram[b];
                break;
            }
        }
    }
    return stats;
}

// Redistributes neurons round-robin over a different tile count, keeping
// global neuron identity g = tile*neurons_per_tile + neuron. Used for
// tile-scaling sweeps.
inline SpikeTrace remap_uniform(const SpikeTrace& trace, const ChipConfig& original,
                                std::uint32_t new_num_tiles) {
    if (new_num_tiles < 1) throw ConfigError("remap_uniform: need >= 1 tile");
    const std::uint64_t total = original.total_neurons();
    if ((total + new_num_tiles - 1) / new_num_tiles > original.neurons_per_tile)
        throw ConfigError("remap_uniform: neurons per tile would exceed capacity");

    SpikeTrace out;
    out.trace_id = trace.trace_id;
    out.duration = trace.duration;
    out.events.reserve(trace.events.size());
    for (const SpikeEvent& e : trace.events) {
        const std::uint64_t g =
            static_cast<std::uint64_t>(e.tile) * original.neurons_per_tile + e.neuron;
        out.events.push_back({e.time, static_cast<TileId>(g % new_num_tiles),
                              static_cast<NeuronId>(g / new_num_tiles)});
    }
    std::sort(out.events.begin(), out.events.end(), aer_order);
    return out;
}

}  // namespace neuroage
