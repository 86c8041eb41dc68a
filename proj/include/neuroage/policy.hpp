#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroage/hw.hpp"
#include "neuroage/types.hpp"

namespace neuroage {

enum class PolicyKind { None, FixedInterval, Dynamic };

inline std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::None: return "none";
        case PolicyKind::FixedInterval: return "fixed_interval";
        case PolicyKind::Dynamic: return "dynamic";
    }
    return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "none") return PolicyKind::None;
    if (s == "fixed_interval") return PolicyKind::FixedInterval;
    if (s == "dynamic") return PolicyKind::Dynamic;
    throw ConfigError("unknown policy kind '" + s + "'");
}

struct PolicyConfig {
    PolicyKind kind = PolicyKind::None;
    double th_a = 1.0;          // aging threshold (dynamic)
    double soft_fraction = 0.9; // DSQ enqueue point as a fraction of th_a
    double interval = 0.1;      // [s], fixed-interval period
    double tdsc = 0.005;        // [s], de-stress window length
    std::uint32_t idle_predictor_window = 4;  // recent ISIs per prediction
    bool staggered_phase = false;             // per-tile phase offsets (fixed_interval)

    void validate() const {
        if (!(th_a > 0)) throw ConfigError("policy.th_a must be > 0");
        if (!(soft_fraction > 0 && soft_fraction <= 1))
            throw ConfigError("policy.soft_fraction must be in (0,1]");
        if (!(interval > 0)) throw ConfigError("policy.interval must be > 0");
        if (!(tdsc > 0)) throw ConfigError("policy.tdsc must be > 0");
        if (idle_predictor_window < 1)
            throw ConfigError("policy.idle_predictor_window must be >= 1");
    }

    SimTime tdsc_ns() const { return seconds_to_ns(tdsc); }
    SimTime interval_ns() const { return seconds_to_ns(interval); }
};

enum class Trigger { Hard, Opportunistic, Periodic };

inline std::string to_string(Trigger t) {
    switch (t) {
        case Trigger::Hard: return "hard";
        case Trigger::Opportunistic: return "opportunistic";
        case Trigger::Periodic: return "periodic";
    }
    return "?";
}

struct Action {
    enum class Kind { Enqueue, DestressNow };
    Kind kind = Kind::Enqueue;
    TileId tile = 0;
    Trigger trigger = Trigger::Hard;
    double aging = 0.0;  // tile max aging when the action was decided
};

struct DsqEntry {
    TileId tile = 0;
    SimTime enqueue_time = 0;
    double aging_at_enqueue = 0.0;
};

// Trailing-mean idle-gap predictor: the mean of the last `window` entries of
// a recent-ISI series. With no observed ISI the gap is unknowable and the
// sentinel +infinity means "always schedulable".
inline double predict_idle_gap(std::span<const double> recent_isis, std::uint32_t window) {
    if (window < 1) throw std::domain_error("predict_idle_gap: window must be >= 1");
    if (recent_isis.empty()) return std::numeric_limits<double>::infinity();
    const std::size_t n = std::min<std::size_t>(window, recent_isis.size());
    double sum = 0;
    for (std::size_t i = recent_isis.size() - n; i < recent_isis.size(); ++i)
        sum += recent_isis[i];
    return sum / static_cast<double>(n);
}

// Run-time reliability manager. Owned by the simulation engine, consulted
// once per emitted spike and at every event boundary; returns de-stress
// decisions as actions for the engine to execute.
class Policy {
public:
    Policy() = default;

    Policy(const PolicyConfig& cfg, const ChipConfig& chip, SimTime run_duration)
        : cfg_(cfg), neurons_per_tile_(chip.neurons_per_tile), duration_(run_duration) {
        cfg_.validate();
        const std::uint32_t tiles = chip.num_tiles;
        enqueued_.assign(tiles, false);
        if (cfg_.kind == PolicyKind::Dynamic) {
            const std::size_t total = static_cast<std::size_t>(tiles) * neurons_per_tile_;
            last_spike_.assign(total, -1);
            spike_counts_.assign(total, 0);
            ring_.assign(total * cfg_.idle_predictor_window, 0);
            ring_size_.assign(total, 0);
            ring_head_.assign(total, 0);
            argmax_neuron_.assign(tiles, 0);
            argmax_count_.assign(tiles, 0);
        }
        if (cfg_.kind == PolicyKind::FixedInterval) {
            next_due_.assign(tiles, 0);
            for (TileId t = 0; t < tiles; ++t) {
                const SimTime offset =
                    cfg_.staggered_phase ? static_cast<SimTime>(
                                               (static_cast<__int128>(cfg_.interval_ns()) * t) / tiles)
                                         : 0;
                next_due_[t] = offset + cfg_.interval_ns();
            }
        }
    }

    const PolicyConfig& config() const { return cfg_; }

    // Consulted after each spike emission and its aging update.
    std::optional<Action> on_spike(TileId tile, NeuronId neuron, SimTime now,
                                   double tile_max_aging) {
        if (cfg_.kind != PolicyKind::Dynamic) return std::nullopt;
        observe_spike(tile, neuron, now);
        if (tile_max_aging >= cfg_.th_a)
            return Action{Action::Kind::DestressNow, tile, Trigger::Hard, tile_max_aging};
        if (tile_max_aging >= cfg_.soft_fraction * cfg_.th_a && !enqueued_[tile]) {
            enqueued_[tile] = true;
            dsq_.push_back({tile, now, tile_max_aging});
            return Action{Action::Kind::Enqueue, tile, Trigger::Opportunistic, tile_max_aging};
        }
        return std::nullopt;
    }

    // Consulted at every event boundary; appends decisions to `out`.
    void on_tick(SimTime now, std::span<const double> tile_max_aging,
                 std::span<const SimTime> tile_busy_until, std::vector<Action>& out) {
        if (cfg_.kind == PolicyKind::FixedInterval) {
            for (TileId t = 0; t < next_due_.size(); ++t) {
                while (next_due_[t] <= now && next_due_[t] <= duration_) {
                    if (now >= tile_busy_until[t])
                        out.push_back({Action::Kind::DestressNow, t, Trigger::Periodic,
                                       tile_max_aging[t]});
                    next_due_[t] += cfg_.interval_ns();
                }
            }
            return;
        }
        if (cfg_.kind != PolicyKind::Dynamic || dsq_.empty()) return;

        for (std::size_t i = 0; i < dsq_.size();) {
            const TileId t = dsq_[i].tile;
            const double aging = tile_max_aging[t];
            if (aging < cfg_.soft_fraction * cfg_.th_a) {
                // Idle recovery took the tile back below the enqueue point.
                enqueued_[t] = false;
                dsq_.erase(dsq_.begin() + static_cast<std::ptrdiff_t>(i));
                continue;
            }
            if (now >= tile_busy_until[t]) {
                const bool hard = aging >= cfg_.th_a;
                if (hard || predicted_gap_seconds(t) >= cfg_.tdsc) {
                    out.push_back({Action::Kind::DestressNow, t,
                                   hard ? Trigger::Hard : Trigger::Opportunistic, aging});
                }
            }
            ++i;
        }
    }

    // The engine reports an actually issued de-stress so queue and counters
    // stay consistent.
    void on_destress_issued(TileId tile, SimTime) {
        if (enqueued_.empty()) return;
        if (enqueued_[tile]) {
            enqueued_[tile] = false;
            dsq_.erase(std::remove_if(dsq_.begin(), dsq_.end(),
                                      [tile](const DsqEntry& e) { return e.tile == tile; }),
                       dsq_.end());
        }
        if (cfg_.kind == PolicyKind::Dynamic) {
            const std::size_t base = static_cast<std::size_t>(tile) * neurons_per_tile_;
            std::fill(spike_counts_.begin() + static_cast<std::ptrdiff_t>(base),
                      spike_counts_.begin() + static_cast<std::ptrdiff_t>(base + neurons_per_tile_),
                      0u);
            argmax_neuron_[tile] = 0;
            argmax_count_[tile] = 0;
        }
    }

    // Fixed-interval policies need ticks even when no spikes are near.
    std::optional<SimTime> next_tick_after(SimTime now) const {
        if (cfg_.kind != PolicyKind::FixedInterval) return std::nullopt;
        SimTime best = std::numeric_limits<SimTime>::max();
        for (SimTime due : next_due_)
            if (due > now && due <= duration_) best = std::min(best, due);
        if (best == std::numeric_limits<SimTime>::max()) return std::nullopt;
        return best;
    }

    const std::vector<DsqEntry>& queue() const { return dsq_; }

    // Predicted idle gap for the tile's most-active neuron, in seconds.
    double predicted_gap_seconds(TileId tile) const {
        if (argmax_count_[tile] < 2) return std::numeric_limits<double>::infinity();
        const std::size_t g =
            static_cast<std::size_t>(tile) * neurons_per_tile_ + argmax_neuron_[tile];
        const std::uint32_t n = ring_size_[g];
        if (n == 0) return std::numeric_limits<double>::infinity();
        const std::size_t base = g * cfg_.idle_predictor_window;
        SimTime sum = 0;
        for (std::uint32_t i = 0; i < n; ++i) sum += ring_[base + i];
        return ns_to_seconds(sum) / n;
    }

private:
    void observe_spike(TileId tile, NeuronId neuron, SimTime now) {
        const std::size_t g = static_cast<std::size_t>(tile) * neurons_per_tile_ + neuron;
        if (last_spike_[g] >= 0) {
            const SimTime isi = now - last_spike_[g];
            const std::size_t base = g * cfg_.idle_predictor_window;
            ring_[base + ring_head_[g]] = isi;
            ring_head_[g] = (ring_head_[g] + 1) % cfg_.idle_predictor_window;
            ring_size_[g] = std::min(ring_size_[g] + 1, cfg_.idle_predictor_window);
        }
        last_spike_[g] = now;
        if (++spike_counts_[g] > argmax_count_[tile]) {
            argmax_count_[tile] = spike_counts_[g];
            argmax_neuron_[tile] = neuron;
        }
    }

    PolicyConfig cfg_;
    std::uint32_t neurons_per_tile_ = 0;
    SimTime duration_ = 0;

    std::vector<DsqEntry> dsq_;
    std::vector<bool> enqueued_;

    // Dynamic-policy predictor state, flat per (tile, neuron).
    std::vector<SimTime> last_spike_;
    std::vector<std::uint32_t> spike_counts_;
    std::vector<SimTime> ring_;
    std::vector<std::uint32_t> ring_size_;
    std::vector<std::uint32_t> ring_head_;
    std::vector<NeuronId> argmax_neuron_;
    std::vector<std::uint32_t> argmax_count_;

    // Fixed-interval schedule, per tile.
    std::vector<SimTime> next_due_;
};

}  // namespace neuroage
