#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "neuroage/aging.hpp"
#include "neuroage/hw.hpp"
#include "neuroage/policy.hpp"
#include "neuroage/workload.hpp"

namespace neuroage {

// Consecutive differences of a strictly increasing spike-time series.
// Fewer than two spikes yield an empty series.
inline std::vector<SimTime> isi_instantaneous(std::span<const SimTime> times) {
    std::vector<SimTime> isi;
    if (times.size() < 2) return isi;
    isi.reserve(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] <= times[i - 1])
            throw std::domain_error("isi_instantaneous: spike times must be strictly increasing");
        isi.push_back(times[i] - times[i - 1]);
    }
    return isi;
}

struct NeuronIsi {
    TileId tile = 0;
    NeuronId neuron = 0;
    std::uint64_t spike_count = 0;          // k_n
    std::vector<SimTime> spike_times;
    std::vector<SimTime> isi_inst;          // length k_n - 1
    SimTime isi_sum = 0;                    // sum of the instantaneous series

    // Average ISI, defined as (sum of instantaneous ISIs) / k_n so that a
    // tDSC delay of the last spike moves the average by exactly tDSC/k_n.
    double isi_avg_seconds() const {
        return spike_count == 0 ? 0.0
                                : ns_to_seconds(isi_sum) / static_cast<double>(spike_count);
    }
};

struct IsiStats {
    std::vector<NeuronIsi> neurons;         // ordered by (tile, neuron)
    std::uint64_t total_spikes = 0;         // K = sum of k_n

    const NeuronIsi* find(TileId tile, NeuronId neuron) const {
        auto it = std::lower_bound(neurons.begin(), neurons.end(), std::pair{tile, neuron},
                                   [](const NeuronIsi& a, const std::pair<TileId, NeuronId>& k) {
                                       return a.tile != k.first ? a.tile < k.first
                                                                : a.neuron < k.second;
                                   });
        if (it == neurons.end() || it->tile != tile || it->neuron != neuron) return nullptr;
        return &*it;
    }
};

inline IsiStats isi_stats(const SpikeTrace& trace) {
    std::map<std::pair<TileId, NeuronId>, std::vector<SimTime>> per_neuron;
    for (const SpikeEvent& e : trace.events) per_neuron[{e.tile, e.neuron}].push_back(e.time);

    IsiStats stats;
    stats.neurons.reserve(per_neuron.size());
    for (auto& [key, times] : per_neuron) {
        NeuronIsi n;
        n.tile = key.first;
        n.neuron = key.second;
        n.spike_count = times.size();
        n.spike_times = std::move(times);
        n.isi_inst = isi_instantaneous(n.spike_times);
        for (SimTime d : n.isi_inst) n.isi_sum += d;
        stats.total_spikes += n.spike_count;
        stats.neurons.push_back(std::move(n));
    }
    return stats;
}

struct DestressRecord {
    SimTime time = 0;        // window start
    TileId tile = 0;
    SimTime tdsc = 0;        // window length
    Trigger trigger = Trigger::Hard;
    double aging_at_issue = 0.0;
};

// Per-neuron ISI change between a managed run and its unmanaged baseline.
struct NeuronIsiDelta {
    TileId tile = 0;
    NeuronId neuron = 0;
    std::uint64_t spike_count = 0;              // k_n (baseline == managed)
    double isi_avg_baseline = 0;                // [s]
    double isi_avg_managed = 0;                 // [s]
    double delta_avg = 0;                       // [s], measured
    std::vector<SimTime> delta_inst;            // managed - baseline, per gap
    // Closed-form cross-check: (windows that delayed this neuron) * tDSC / k_n.
    double delta_avg_closed_form = 0;           // [s]
    std::uint64_t delaying_windows = 0;
    // Literal alternate reading of the per-gap change: for each delayed
    // spike, the affected gap's baseline ISI plus tDSC.
    std::vector<SimTime> literal_new_isi;       // [ns]
};

struct IsiDelta {
    std::vector<NeuronIsiDelta> neurons;
    double mean_delta_avg = 0;  // [s], over neurons with >= 2 baseline spikes
};

// Compares per-neuron ISI statistics of two runs over the same trace.
// Spike conservation must hold: both runs contain the same neurons with the
// same spike counts. The de-stress log drives the closed-form check value.
inline IsiDelta isi_delta(const IsiStats& baseline, const IsiStats& managed,
                          std::span<const DestressRecord> destress_log) {
    if (baseline.neurons.size() != managed.neurons.size())
        throw std::invalid_argument("isi_delta: neuron sets differ");

    IsiDelta out;
    out.neurons.reserve(baseline.neurons.size());
    double delta_sum = 0;
    std::uint64_t delta_count = 0;

    for (std::size_t i = 0; i < baseline.neurons.size(); ++i) {
        const NeuronIsi& b = baseline.neurons[i];
        const NeuronIsi& m = managed.neurons[i];
        if (b.tile != m.tile || b.neuron != m.neuron || b.spike_count != m.spike_count)
            throw std::invalid_argument("isi_delta: neuron sets differ");

        NeuronIsiDelta d;
        d.tile = b.tile;
        d.neuron = b.neuron;
        d.spike_count = b.spike_count;
        d.isi_avg_baseline = b.isi_avg_seconds();
        d.isi_avg_managed = m.isi_avg_seconds();
        // Computed from the integer ISI sums so the delta is exact.
        d.delta_avg = b.spike_count == 0
                          ? 0.0
                          : ns_to_seconds(m.isi_sum - b.isi_sum) / static_cast<double>(b.spike_count);
        d.delta_inst.resize(b.isi_inst.size());
        for (std::size_t k = 0; k < b.isi_inst.size(); ++k)
            d.delta_inst[k] = m.isi_inst[k] - b.isi_inst[k];

        // A window delayed this neuron if some baseline spike was due inside it.
        SimTime tdsc_sum = 0;
        for (const DestressRecord& w : destress_log) {
            if (w.tile != b.tile) continue;
            auto first = std::lower_bound(b.spike_times.begin(), b.spike_times.end(), w.time);
            if (first != b.spike_times.end() && *first < w.time + w.tdsc) {
                ++d.delaying_windows;
                tdsc_sum += w.tdsc;
                const auto idx =
                    static_cast<std::size_t>(std::distance(b.spike_times.begin(), first));
                if (idx >= 1)
                    d.literal_new_isi.push_back(b.isi_inst[idx - 1] + w.tdsc);
            }
        }
        d.delta_avg_closed_form =
            b.spike_count == 0 ? 0.0
                               : ns_to_seconds(tdsc_sum) / static_cast<double>(b.spike_count);

        if (b.spike_count >= 2) {
            delta_sum += d.delta_avg;
            ++delta_count;
        }
        out.neurons.push_back(std::move(d));
    }
    out.mean_delta_avg = delta_count ? delta_sum / static_cast<double>(delta_count) : 0.0;
    return out;
}

// Unified reliability/performance metric: max aging divided by the average
// ISI distortion. A distortion-free run yields +infinity, reported
// downstream as "no distortion".
inline double aging_per_isi_distortion(double max_aging, double delta_isi_avg) {
    if (!(max_aging >= 0)) throw std::domain_error("aging_per_isi_distortion: negative aging");
    if (!(delta_isi_avg >= 0))
        throw std::domain_error("aging_per_isi_distortion: negative ISI delta");
    if (delta_isi_avg == 0) return std::numeric_limits<double>::infinity();
    return max_aging / delta_isi_avg;
}

struct NeuronAgingRow {
    TileId tile = 0;
    NeuronId neuron = 0;
    double recoverable = 0;
    double permanent = 0;
    double total = 0;
};

struct TileAgingSummary {
    TileId tile = 0;
    double max_neuron_aging = 0;
    double total_aging = 0;          // summed over the tile's neurons
    std::uint64_t spike_count = 0;   // emitted spikes attributed to the tile
};

struct AgingSummary {
    std::vector<NeuronAgingRow> neurons;
    std::vector<TileAgingSummary> tiles;
    double chip_max_aging = 0;
    double chip_max_vth_shift_pct = 0;  // NaN when uncalibrated
};

inline AgingSummary aging_summary(const std::vector<TileState>& tiles,
                                  std::span<const std::uint64_t> tile_spike_counts,
                                  const VthCalibration& cal) {
    AgingSummary s;
    for (TileId t = 0; t < tiles.size(); ++t) {
        TileAgingSummary ts;
        ts.tile = t;
        ts.spike_count = t < tile_spike_counts.size() ? tile_spike_counts[t] : 0;
        for (NeuronId n = 0; n < tiles[t].neuron_states.size(); ++n) {
            const NeuronAgingState& st = tiles[t].neuron_states[n];
            s.neurons.push_back({t, n, st.aging_recoverable, st.aging_permanent, st.total()});
            ts.max_neuron_aging = std::max(ts.max_neuron_aging, st.total());
            ts.total_aging += st.total();
        }
        s.chip_max_aging = std::max(s.chip_max_aging, ts.max_neuron_aging);
        s.tiles.push_back(ts);
    }
    s.chip_max_vth_shift_pct = cal.calibrated() ? vth_shift_pct(s.chip_max_aging, cal)
                                                : std::numeric_limits<double>::quiet_NaN();
    return s;
}

}  // namespace neuroage
