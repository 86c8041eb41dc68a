#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "neuroage/aging.hpp"
#include "neuroage/types.hpp"

namespace neuroage {

// Tiled-chip geometry. The default mirrors a 12-tile device with 128 output
// neurons per tile and a 128x128 synaptic crossbar.
struct ChipConfig {
    std::uint32_t num_tiles = 12;
    std::uint32_t neurons_per_tile = 128;
    std::uint32_t crosspoints_per_tile = 65536;
    std::uint32_t counter_width_bits = 16;

    // Single-constant routing latency and the interconnect bandwidth rating.
    // Both are carried through to the config echo; neither feeds the aging
    // math.
    double routing_latency = 0.0;          // [s]
    double aer_bandwidth_events_per_s = 1.8e9;

    void validate() const {
        if (num_tiles < 1) throw ConfigError("chip.num_tiles must be >= 1");
        if (neurons_per_tile < 1) throw ConfigError("chip.neurons_per_tile must be >= 1");
        if (counter_width_bits < 1 || counter_width_bits > 32)
            throw ConfigError("chip.counter_width_bits must be in [1,32]");
        if (crosspoints_per_tile < neurons_per_tile)
            throw ConfigError("chip.crosspoints_per_tile must be >= chip.neurons_per_tile");
        if (!(routing_latency >= 0)) throw ConfigError("chip.routing_latency must be >= 0");
    }

    std::uint64_t total_neurons() const {
        return static_cast<std::uint64_t>(num_tiles) * neurons_per_tile;
    }

    std::uint32_t counter_max() const {
        return counter_width_bits >= 32 ? 0xffffffffu
                                        : (1u << counter_width_bits) - 1u;
    }

    bool contains(TileId tile, NeuronId neuron) const {
        return tile < num_tiles && neuron < neurons_per_tile;
    }
};

// Total spike-counter storage across the chip. The default geometry gives
// 12*128*16 = 24576 bits.
inline std::uint64_t counter_storage_bits(const ChipConfig& chip) {
    return static_cast<std::uint64_t>(chip.num_tiles) * chip.neurons_per_tile *
           chip.counter_width_bits;
}

enum class PumpVoltage { Destress, Idle, Spike };

// One spike on the interconnect: source tile, source neuron, time.
struct AerEvent {
    SimTime time = 0;
    TileId tile = 0;
    NeuronId neuron = 0;

    friend bool operator==(const AerEvent&, const AerEvent&) = default;
};

inline bool aer_order(const AerEvent& a, const AerEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.tile != b.tile) return a.tile < b.tile;
    return a.neuron < b.neuron;
}

// Serializes a set of spikes for the interconnect: ordered by time, ties
// broken by (tile, neuron) ascending. Bijective with the input.
inline std::vector<AerEvent> aer_encode(std::vector<AerEvent> spikes) {
    std::stable_sort(spikes.begin(), spikes.end(), aer_order);
    return spikes;
}

// Mutable per-tile state: charge-pump level, per-output-neuron spike
// counters since the last reset, per-neuron aging, and the time until which
// the tile is offline for de-stress.
struct TileState {
    PumpVoltage pump_voltage = PumpVoltage::Idle;
    std::vector<std::uint32_t> counters;
    std::vector<NeuronAgingState> neuron_states;
    SimTime busy_until = 0;

    explicit TileState(std::uint32_t neurons = 0)
        : counters(neurons, 0), neuron_states(neurons) {}

    bool busy_at(SimTime now) const { return now < busy_until; }
};

// Bus-snoop counter update: increments the source neuron's counter,
// saturating at the counter width (never wrapping).
inline void snoop_count(TileState& tile, NeuronId neuron, std::uint32_t counter_max) {
    if (neuron >= tile.counters.size())
        throw std::out_of_range("snoop_count: neuron id out of range");
    if (tile.counters[neuron] < counter_max) ++tile.counters[neuron];
}

inline void reset_counters(TileState& tile) {
    std::fill(tile.counters.begin(), tile.counters.end(), 0u);
}

// Takes the tile offline for a discharge cycle: counters reset, pump dropped
// to the de-stress level, tile silent until now + tDSC. The per-neuron
// recovery for the window is applied by the caller at the window end.
inline void begin_destress(TileState& tile, SimTime now, SimTime tdsc) {
    if (tdsc <= 0) throw std::domain_error("begin_destress: tDSC must be > 0");
    if (tile.busy_at(now))
        throw StateError("begin_destress: tile is already de-stressing");
    tile.pump_voltage = PumpVoltage::Destress;
    tile.busy_until = now + tdsc;
    reset_counters(tile);
}

inline void end_destress(TileState& tile) { tile.pump_voltage = PumpVoltage::Idle; }

}  // namespace neuroage
