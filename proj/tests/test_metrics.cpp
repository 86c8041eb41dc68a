#include <doctest.h>

#include <cmath>

#include "neuroage/metrics.hpp"
#include "neuroage/rng.hpp"

using namespace neuroage;

namespace {

SpikeTrace trace_of(std::vector<SpikeEvent> events) {
    SpikeTrace t;
    t.events = aer_encode(std::move(events));
    return t;
}

}  // namespace

TEST_CASE("isi_instantaneous") {
    // [1, 3, 6] ms -> [2, 3] ms
    const std::vector<SimTime> times = {1'000'000, 3'000'000, 6'000'000};
    const auto isi = isi_instantaneous(times);
    REQUIRE(isi.size() == 2);
    CHECK(isi[0] == 2'000'000);
    CHECK(isi[1] == 3'000'000);

    CHECK(isi_instantaneous(std::vector<SimTime>{5}).empty());
    CHECK(isi_instantaneous(std::vector<SimTime>{}).empty());

    const std::vector<SimTime> bad = {3, 3};
    CHECK_THROWS_AS(isi_instantaneous(bad), std::domain_error);
    const std::vector<SimTime> regress = {5, 2};
    CHECK_THROWS_AS(isi_instantaneous(regress), std::domain_error);
}

TEST_CASE("isi_instantaneous equals the pairwise loop on random sorted input") {
    CounterRng rng{3};
    std::vector<SimTime> times;
    SimTime t = 0;
    for (int i = 0; i < 1000; ++i) {
        t += 1 + static_cast<SimTime>(rng.bits(1, i) % 1'000'000);
        times.push_back(t);
    }
    const auto isi = isi_instantaneous(times);
    REQUIRE(isi.size() == times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
        CHECK(isi[i - 1] == times[i] - times[i - 1]);
}

TEST_CASE("isi_stats averages divide by the spike count") {
    // [1, 3, 6] ms: sum of ISIs 5 ms over k=3 spikes -> 5/3 ms
    const SpikeTrace t = trace_of({{1'000'000, 0, 0}, {3'000'000, 0, 0}, {6'000'000, 0, 0}});
    const IsiStats s = isi_stats(t);
    REQUIRE(s.neurons.size() == 1);
    CHECK(s.total_spikes == 3);
    CHECK(s.neurons[0].spike_count == 3);
    CHECK(s.neurons[0].isi_avg_seconds() == doctest::Approx(5e-3 / 3).epsilon(1e-12));
}

TEST_CASE("isi_delta measures a pure last-spike delay as tDSC/k_n") {
    const SimTime ms = 1'000'000;
    // k_n = 5 spikes; the managed run delays the last one by tDSC = 10 ms.
    const SpikeTrace baseline =
        trace_of({{10 * ms, 0, 0}, {20 * ms, 0, 0}, {30 * ms, 0, 0}, {40 * ms, 0, 0},
                  {50 * ms, 0, 0}});
    const SpikeTrace managed =
        trace_of({{10 * ms, 0, 0}, {20 * ms, 0, 0}, {30 * ms, 0, 0}, {40 * ms, 0, 0},
                  {60 * ms, 0, 0}});
    const std::vector<DestressRecord> log = {{50 * ms, 0, 10 * ms, Trigger::Periodic, 0.0}};
    const IsiDelta d = isi_delta(isi_stats(baseline), isi_stats(managed), log);
    REQUIRE(d.neurons.size() == 1);
    // 10 ms / 5 = 2 ms, exactly
    CHECK(d.neurons[0].delta_avg == doctest::Approx(2e-3).epsilon(1e-12));
    CHECK(d.neurons[0].delta_avg_closed_form == doctest::Approx(2e-3).epsilon(1e-12));
    CHECK(d.neurons[0].delaying_windows == 1);
    REQUIRE(d.neurons[0].literal_new_isi.size() == 1);
    // the affected gap was 10 ms; the literal reading reports 10 + 10 ms
    CHECK(d.neurons[0].literal_new_isi[0] == 20 * ms);
    CHECK(d.mean_delta_avg == doctest::Approx(2e-3).epsilon(1e-12));
}

TEST_CASE("isi_delta with no de-stress operations is all zeros") {
    const SpikeTrace t = trace_of({{100, 0, 0}, {200, 0, 0}, {150, 0, 1}, {300, 0, 1}});
    const IsiDelta d = isi_delta(isi_stats(t), isi_stats(t), {});
    for (const NeuronIsiDelta& n : d.neurons) {
        CHECK(n.delta_avg == 0.0);
        CHECK(n.delaying_windows == 0);
        for (SimTime di : n.delta_inst) CHECK(di == 0);
    }
    CHECK(d.mean_delta_avg == 0.0);
}

TEST_CASE("isi_delta rejects mismatched neuron sets") {
    const SpikeTrace a = trace_of({{100, 0, 0}, {200, 0, 0}});
    const SpikeTrace b = trace_of({{100, 0, 1}, {200, 0, 1}});
    CHECK_THROWS_AS(isi_delta(isi_stats(a), isi_stats(b), {}), std::invalid_argument);
}

TEST_CASE("delaying a middle spike leaves the average unchanged") {
    const SimTime ms = 1'000'000;
    const SpikeTrace baseline = trace_of({{10 * ms, 0, 0}, {20 * ms, 0, 0}, {30 * ms, 0, 0}});
    const SpikeTrace managed = trace_of({{10 * ms, 0, 0}, {25 * ms, 0, 0}, {30 * ms, 0, 0}});
    const IsiDelta d = isi_delta(isi_stats(baseline), isi_stats(managed), {});
    CHECK(d.neurons[0].delta_avg == doctest::Approx(0.0));
    CHECK(d.neurons[0].delta_inst[0] == 5 * ms);   // widened gap
    CHECK(d.neurons[0].delta_inst[1] == -5 * ms);  // narrowed gap
}

TEST_CASE("aging_per_isi_distortion") {
    CHECK(aging_per_isi_distortion(10.0, 2e-3) == doctest::Approx(5000.0));
    CHECK(std::isinf(aging_per_isi_distortion(10.0, 0.0)));  // "no distortion"
    CHECK_THROWS_AS(aging_per_isi_distortion(-1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(aging_per_isi_distortion(1.0, -1.0), std::domain_error);
}

TEST_CASE("aging_summary") {
    std::vector<TileState> tiles(3, TileState(2));
    std::vector<std::uint64_t> spikes = {5, 7, 0};
    VthCalibration cal;
    cal.baseline_aging = 1.0;

    SUBCASE("all zero") {
        const AgingSummary s = aging_summary(tiles, spikes, cal);
        CHECK(s.chip_max_aging == 0.0);
        CHECK(s.chip_max_vth_shift_pct == 0.0);
        for (const NeuronAgingRow& r : s.neurons) CHECK(r.total == 0.0);
    }

    SUBCASE("single nonzero neuron sets the chip max") {
        tiles[1].neuron_states[0].aging_recoverable = 0.25;
        tiles[1].neuron_states[0].aging_permanent = 0.35;
        const AgingSummary s = aging_summary(tiles, spikes, cal);
        CHECK(s.chip_max_aging == doctest::Approx(0.6));
        CHECK(s.tiles[1].max_neuron_aging == doctest::Approx(0.6));
        CHECK(s.tiles[1].total_aging == doctest::Approx(0.6));
        CHECK(s.tiles[0].max_neuron_aging == 0.0);
        CHECK(s.chip_max_vth_shift_pct == doctest::Approx(6.0));
        CHECK(s.tiles[1].spike_count == 7);
    }

    SUBCASE("matches a brute-force max scan on random states") {
        CounterRng rng{13};
        double expected_max = 0;
        std::uint64_t draw = 0;
        for (auto& tile : tiles)
            for (auto& st : tile.neuron_states) {
                st.aging_recoverable = rng.uniform(1, draw++);
                st.aging_permanent = rng.uniform(2, draw++);
                expected_max = std::max(expected_max, st.total());
            }
        const AgingSummary s = aging_summary(tiles, spikes, cal);
        CHECK(s.chip_max_aging == doctest::Approx(expected_max).epsilon(1e-13));
    }
}
