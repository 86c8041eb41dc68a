#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "neuroage/aging.hpp"
#include "neuroage/hw.hpp"
#include "neuroage/metrics.hpp"
#include "neuroage/policy.hpp"
#include "neuroage/workload.hpp"

namespace neuroage {

struct SimConfig {
    ChipConfig chip;
    Environment env;
    AgingParams aging;
    PolicyConfig policy;
    VthCalibration calibration;
    bool sample_trajectory = false;

    void validate() const {
        chip.validate();
        env.validate();
        aging.validate();
        policy.validate();
    }
};

struct TrajectorySample {
    SimTime time = 0;
    TileId tile = 0;
    NeuronId neuron = 0;    // emitting neuron; neurons_per_tile on de-stress rows
    double neuron_total = 0;
    double tile_max = 0;    // tile max aging view after the event
    char kind = 's';        // 's' spike emission, 'd' de-stress window end
};

struct RunResult {
    SpikeTrace managed_log;
    std::vector<DestressRecord> destress_log;
    std::vector<TileState> final_tiles;      // advanced exactly to end_time
    std::vector<std::uint64_t> tile_spike_counts;
    std::vector<TrajectorySample> trajectory;
    SimTime duration = 0;       // run horizon from the input trace
    SimTime end_time = 0;       // last instant the state was advanced to
    std::uint64_t event_count = 0;
    std::uint64_t input_spikes = 0;
    std::uint64_t emitted_spikes = 0;
    std::uint64_t deferred_spikes = 0;
    double wall_seconds = 0;    // informational; never written to reports
};

namespace detail {

// Queue entry. Priority at equal times: de-stress end, then spike, then
// policy tick, so a spike due exactly at a window end is emitted, not
// deferred again. `seq` carries the input-trace position of spikes, which
// keeps deferred releases in original order ahead of later spikes.
struct SimEvent {
    SimTime time = 0;
    std::uint8_t prio = 1;  // 0 destress_end, 1 spike_due, 2 policy_tick
    std::uint64_t seq = 0;
    TileId tile = 0;
    NeuronId neuron = 0;
};

struct SimEventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.prio != b.prio) return a.prio > b.prio;
        return a.seq > b.seq;
    }
};

class Engine {
public:
    Engine(const SimConfig& cfg, const SpikeTrace& trace) : cfg_(cfg), trace_(trace) {
        cfg_.validate();
        trace.validate_against(cfg_.chip);
        const std::uint32_t tiles = cfg_.chip.num_tiles;
        tiles_.assign(tiles, TileState(cfg_.chip.neurons_per_tile));
        busy_.assign(tiles, 0);
        tile_max_.assign(tiles, 0.0);
        tile_argmax_.assign(tiles, 0);
        deferred_.assign(tiles, {});
        tile_spikes_.assign(tiles, 0);
        last_emit_.assign(cfg_.chip.total_neurons(), -1);
        duration_ = trace.horizon();
        policy_ = Policy(cfg_.policy, cfg_.chip, duration_);
        per_spike_ = aging_per_spike(cfg_.env, cfg_.aging);
        seq_next_ = trace.events.size();
    }

    RunResult run() {
        const auto started = std::chrono::steady_clock::now();
        RunResult out;
        out.input_spikes = trace_.events.size();
        out.duration = duration_;
        managed_.reserve(trace_.events.size());

        if (auto tick = policy_.next_tick_after(-1)) push_tick(*tick);

        std::size_t cursor = 0;
        SimTime now = 0;
        while (true) {
            std::optional<SimEvent> ev;
            if (cursor < trace_.events.size()) {
                const SpikeEvent& e = trace_.events[cursor];
                ev = SimEvent{e.time, 1, cursor, e.tile, e.neuron};
            }
            if (!heap_.empty() && (!ev || SimEventAfter{}(*ev, heap_.top()))) {
                ev = heap_.top();
                heap_.pop();
            } else if (ev) {
                ++cursor;
            }
            if (!ev) break;

            now = std::max(now, ev->time);
            ++event_count_;
            if (ev->prio == 0)
                finish_destress(ev->tile, ev->time);
            else if (ev->prio == 1)
                process_spike(*ev);

            // Every processed event is a boundary for the policy.
            actions_.clear();
            policy_.on_tick(ev->time, tile_max_, busy_, actions_);
            for (const Action& a : actions_)
                if (a.kind == Action::Kind::DestressNow) issue_destress(ev->time, a);

            if (ev->prio == 2)
                if (auto tick = policy_.next_tick_after(ev->time)) push_tick(*tick);
        }

        // Bring every neuron to the end of the run so summaries are exact.
        const SimTime end = std::max(now, duration_);
        for (TileId t = 0; t < tiles_.size(); ++t) {
            for (NeuronId n = 0; n < cfg_.chip.neurons_per_tile; ++n) {
                NeuronAgingState& st = tiles_[t].neuron_states[n];
                if (st.last_update < end) {
                    st = apply_recovery(st, ns_to_seconds(end - st.last_update),
                                        RecoveryMode::Idle, cfg_.aging);
                    st.last_update = end;
                }
            }
            rescan_tile(t);
        }

        out.end_time = end;
        out.managed_log.trace_id = trace_.trace_id;
        out.managed_log.chip_hash = trace_.chip_hash;
        out.managed_log.events = aer_encode(std::move(managed_));
        out.managed_log.duration =
            std::max(duration_, out.managed_log.events.empty()
                                    ? SimTime{0}
                                    : out.managed_log.events.back().time);
        out.destress_log = std::move(destress_log_);
        out.final_tiles = std::move(tiles_);
        out.tile_spike_counts = std::move(tile_spikes_);
        out.trajectory = std::move(trajectory_);
        out.event_count = event_count_;
        out.emitted_spikes = emitted_;
        out.deferred_spikes = deferred_count_;
        out.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return out;
    }

private:
    void push_tick(SimTime at) { heap_.push({at, 2, seq_next_++, 0, 0}); }

    void process_spike(const SimEvent& ev) {
        TileState& tile = tiles_[ev.tile];
        if (tile.busy_at(ev.time)) {
            deferred_[ev.tile].push_back(ev);
            ++deferred_count_;
            return;
        }

        // Per-neuron emissions are strictly increasing: simultaneous
        // releases at a window end are serialized at 1 ns.
        const std::uint64_t g =
            static_cast<std::uint64_t>(ev.tile) * cfg_.chip.neurons_per_tile + ev.neuron;
        const SimTime emit_t = std::max(ev.time, last_emit_[g] + 1);
        last_emit_[g] = emit_t;

        NeuronAgingState& st = tile.neuron_states[ev.neuron];
        const double gap = ns_to_seconds(std::max<SimTime>(emit_t - st.last_update, 0));
        st = apply_recovery(st, gap, RecoveryMode::Idle, cfg_.aging);
        st = apply_stress(st, 1, gap, cfg_.env, cfg_.aging);
        st.last_update = emit_t;
        update_tile_max(ev.tile, ev.neuron, st.total());

        snoop_count(tile, ev.neuron, cfg_.chip.counter_max());
        ++tile_spikes_[ev.tile];
        managed_.push_back({emit_t, ev.tile, ev.neuron});
        ++emitted_;

        if (cfg_.sample_trajectory)
            trajectory_.push_back(
                {emit_t, ev.tile, ev.neuron, st.total(), tile_max_[ev.tile], 's'});

        if (auto act = policy_.on_spike(ev.tile, ev.neuron, emit_t, tile_max_[ev.tile]);
            act && act->kind == Action::Kind::DestressNow)
            issue_destress(ev.time, *act);
    }

    void issue_destress(SimTime now, const Action& a) {
        TileState& tile = tiles_[a.tile];
        if (tile.busy_at(now)) return;  // already offline; nothing to book
        const SimTime tdsc = cfg_.policy.tdsc_ns();
        begin_destress(tile, now, tdsc);
        busy_[a.tile] = tile.busy_until;
        destress_log_.push_back({now, a.tile, tdsc, a.trigger, a.aging});
        heap_.push({tile.busy_until, 0, seq_next_++, a.tile, 0});
        policy_.on_destress_issued(a.tile, now);
    }

    void finish_destress(TileId t, SimTime end) {
        TileState& tile = tiles_[t];
        const SimTime start = end - cfg_.policy.tdsc_ns();
        const double tdsc_s = ns_to_seconds(cfg_.policy.tdsc_ns());
        for (NeuronAgingState& st : tile.neuron_states) {
            const SimTime idle = std::max<SimTime>(start - st.last_update, 0);
            if (idle > 0) st = apply_recovery(st, ns_to_seconds(idle), RecoveryMode::Idle, cfg_.aging);
            st = apply_recovery(st, tdsc_s, RecoveryMode::Destress, cfg_.aging);
            st.last_update = end;
        }
        end_destress(tile);
        rescan_tile(t);
        if (cfg_.sample_trajectory)
            trajectory_.push_back(
                {end, t, cfg_.chip.neurons_per_tile, 0.0, tile_max_[t], 'd'});
        for (const SimEvent& ev : deferred_[t]) heap_.push({end, 1, ev.seq, ev.tile, ev.neuron});
        deferred_[t].clear();
    }

    // Tile max over lazily updated neuron totals. Between a neuron's own
    // updates its total only decays, so the cached view is a safe upper
    // bound; a full rescan is needed only when the argmax itself dropped.
    void update_tile_max(TileId t, NeuronId n, double new_total) {
        if (new_total >= tile_max_[t]) {
            tile_max_[t] = new_total;
            tile_argmax_[t] = n;
        } else if (tile_argmax_[t] == n) {
            rescan_tile(t);
        }
    }

    void rescan_tile(TileId t) {
        double best = 0.0;
        NeuronId arg = 0;
        const auto& states = tiles_[t].neuron_states;
        for (NeuronId n = 0; n < states.size(); ++n) {
            const double v = states[n].total();
            if (v > best) {
                best = v;
                arg = n;
            }
        }
        tile_max_[t] = best;
        tile_argmax_[t] = arg;
    }

    SimConfig cfg_;
    const SpikeTrace& trace_;
    SimTime duration_ = 0;
    Policy policy_;
    double per_spike_ = 0;

    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventAfter> heap_;
    std::uint64_t seq_next_ = 0;

    std::vector<TileState> tiles_;
    std::vector<SimTime> busy_;
    std::vector<double> tile_max_;
    std::vector<NeuronId> tile_argmax_;
    std::vector<std::vector<SimEvent>> deferred_;
    std::vector<std::uint64_t> tile_spikes_;
    std::vector<SimTime> last_emit_;

    std::vector<SpikeEvent> managed_;
    std::vector<DestressRecord> destress_log_;
    std::vector<TrajectorySample> trajectory_;
    std::vector<Action> actions_;
    std::uint64_t event_count_ = 0;
    std::uint64_t emitted_ = 0;
    std::uint64_t deferred_count_ = 0;
};

}  // namespace detail

// Runs one deterministic simulation: identical (config, trace) pairs yield
// identical results, bit for bit.
inline RunResult run(const SimConfig& cfg, const SpikeTrace& trace) {
    return detail::Engine(cfg, trace).run();
}

struct SweepAxes {
    std::vector<PolicyConfig> policies;        // empty -> base policy
    std::vector<double> temperatures;          // empty -> base temperature
    std::vector<std::uint32_t> tile_counts;    // empty -> base tile count
    std::vector<std::uint64_t> seeds;          // empty -> base workload as-is
};

struct SweepCell {
    std::size_t policy_i = 0, temp_i = 0, tiles_i = 0, seed_i = 0;
    PolicyKind policy = PolicyKind::None;
    double temperature = 0;
    std::uint32_t num_tiles = 0;
    std::uint64_t seed = 0;
    RunResult result;
    bool ok = false;
    std::string error;
};

// Cartesian product of runs over the axes. The tile-count axis remaps the
// workload uniformly; the seed axis regenerates it when a generator spec is
// given. Failed cells report their error and do not stop the sweep.
inline std::vector<SweepCell> run_sweep(const SimConfig& base, const SpikeTrace& trace,
                                        const std::optional<PoissonWorkloadSpec>& generator,
                                        const SweepAxes& axes, unsigned workers = 0) {
    const std::vector<PolicyConfig> policies =
        axes.policies.empty() ? std::vector<PolicyConfig>{base.policy} : axes.policies;
    const std::vector<double> temps =
        axes.temperatures.empty() ? std::vector<double>{base.env.temperature} : axes.temperatures;
    const std::vector<std::uint32_t> tiles =
        axes.tile_counts.empty() ? std::vector<std::uint32_t>{base.chip.num_tiles}
                                 : axes.tile_counts;
    const std::vector<std::uint64_t> seeds =
        axes.seeds.empty() ? std::vector<std::uint64_t>{generator ? generator->seed : 0}
                           : axes.seeds;

    // Workloads only depend on (seed, tile count); share them across cells.
    std::vector<SpikeTrace> traces(seeds.size() * tiles.size());
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        SpikeTrace per_seed;
        if (generator) {
            PoissonWorkloadSpec spec = *generator;
            spec.seed = seeds[si];
            per_seed = generate_poisson(spec, base.chip);
        } else {
            per_seed = trace;
        }
        for (std::size_t ti = 0; ti < tiles.size(); ++ti)
            traces[si * tiles.size() + ti] =
                tiles[ti] == base.chip.num_tiles ? per_seed
                                                 : remap_uniform(per_seed, base.chip, tiles[ti]);
    }

    std::vector<SweepCell> cells;
    for (std::size_t pi = 0; pi < policies.size(); ++pi)
        for (std::size_t ei = 0; ei < temps.size(); ++ei)
            for (std::size_t ti = 0; ti < tiles.size(); ++ti)
                for (std::size_t si = 0; si < seeds.size(); ++si) {
                    SweepCell c;
                    c.policy_i = pi;
                    c.temp_i = ei;
                    c.tiles_i = ti;
                    c.seed_i = si;
                    c.policy = policies[pi].kind;
                    c.temperature = temps[ei];
                    c.num_tiles = tiles[ti];
                    c.seed = seeds[si];
                    cells.push_back(std::move(c));
                }

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            SweepCell& c = cells[i];
            try {
                SimConfig cfg = base;
                cfg.policy = policies[c.policy_i];
                cfg.env.temperature = temps[c.temp_i];
                cfg.chip.num_tiles = tiles[c.tiles_i];
                c.result = run(cfg, traces[c.seed_i * tiles.size() + c.tiles_i]);
                c.ok = true;
            } catch (const std::exception& e) {
                c.ok = false;
                c.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(workers, std::max<std::size_t>(cells.size(), 1));
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    return cells;
}

}  // namespace neuroage
