#include <doctest.h>

#include <cmath>
#include <numeric>

#include "neuroage/workload.hpp"

using namespace neuroage;

TEST_CASE("time parsing and formatting round-trip at nanosecond precision") {
    CHECK(parse_seconds("0.000") == 0);
    CHECK(parse_seconds("1.5") == 1'500'000'000);
    CHECK(parse_seconds("0.000000001") == 1);
    CHECK(parse_seconds("63072000") == 63'072'000LL * kNsPerSecond);
    CHECK(format_seconds(1'500'000'000) == "1.500000000");
    CHECK(format_seconds(1) == "0.000000001");
    CHECK(parse_seconds(format_seconds(123'456'789'012'345)) == 123'456'789'012'345);
    CHECK_THROWS_AS(parse_seconds("0.0000000001"), ParseError);  // finer than 1 ns
    CHECK_THROWS_AS(parse_seconds("abc"), ParseError);
    CHECK_THROWS_AS(parse_seconds("1.2.3"), ParseError);
}

TEST_CASE("parse_trace basics") {
    const SpikeTrace t = parse_trace("# unit=seconds\n0.000,0,5\n");
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].time == 0);
    CHECK(t.events[0].tile == 0);
    CHECK(t.events[0].neuron == 5);

    CHECK(parse_trace("").events.empty());
    CHECK(parse_trace("# unit=seconds\n# trace=abc\n").trace_id == "abc");
}

TEST_CASE("parse_trace diagnostics carry line numbers") {
    try {
        parse_trace("0.5,0,1\n0.25,0,2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_trace("0.5,0\n"), ParseError);            // malformed
    CHECK_THROWS_AS(parse_trace("0.5,0,x\n"), ParseError);          // bad id
    CHECK_THROWS_AS(parse_trace("-1,0,0\n"), ParseError);           // negative time
    CHECK_THROWS_AS(parse_trace("0.5,0,1\n0.5,0,1\n"), ParseError); // duplicate
    CHECK_THROWS_AS(parse_trace("# what=ever\n"), ParseError);      // unknown key
    CHECK_THROWS_AS(parse_trace("# unit=ms\n"), ParseError);        // unsupported unit
    CHECK_THROWS_AS(parse_trace("# duration=1\n0,0,0\n5,0,0\n"), ParseError);
    // tie-break order is part of the format
    CHECK_THROWS_AS(parse_trace("0.5,1,0\n0.5,0,0\n"), ParseError);
    CHECK_NOTHROW(parse_trace("0.5,0,0\n0.5,0,1\n0.5,1,0\n"));
}

TEST_CASE("emit/parse canonical round-trip") {
    SpikeTrace t;
    t.trace_id = "rt";
    t.duration = 2 * kNsPerSecond;
    t.events = {{0, 0, 1}, {500'000'000, 0, 1}, {500'000'000, 1, 0}, {1'500'000'000, 11, 127}};
    const std::string text = emit_trace(t);
    const SpikeTrace back = parse_trace(text);
    CHECK(back.events == t.events);
    CHECK(back.trace_id == t.trace_id);
    CHECK(back.duration == t.duration);
    CHECK(emit_trace(back) == text);  // canonical form is a fixed point

    // non-canonical spellings normalize
    const SpikeTrace loose = parse_trace("0.50,0,1\n");
    CHECK(emit_trace(loose) == "# unit=seconds\n0.500000000,0,1\n");
}

TEST_CASE("generate_poisson determinism and trivial cases") {
    ChipConfig chip;
    chip.num_tiles = 2;
    chip.neurons_per_tile = 8;

    PoissonWorkloadSpec spec;
    spec.duration = 5.0;
    spec.seed = 99;
    spec.rates.kind = RateSpec::Kind::Constant;
    spec.rates.constant = 0.0;
    CHECK(generate_poisson(spec, chip).events.empty());

    spec.rates.constant = 20.0;
    const SpikeTrace a = generate_poisson(spec, chip);
    const SpikeTrace b = generate_poisson(spec, chip);
    CHECK(emit_trace(a) == emit_trace(b));  // same seed, identical bytes
    CHECK_FALSE(a.events.empty());

    spec.seed = 100;
    const SpikeTrace c = generate_poisson(spec, chip);
    CHECK(emit_trace(a) != emit_trace(c));

    // well-formed: parses back, ids in range
    const SpikeTrace back = parse_trace(emit_trace(a));
    CHECK(back.events.size() == a.events.size());
    CHECK_NOTHROW(back.validate_against(chip));
}

TEST_CASE("generate_poisson matches its nominal rate") {
    ChipConfig chip;
    chip.num_tiles = 1;
    chip.neurons_per_tile = 1;

    PoissonWorkloadSpec spec;
    spec.duration = 100.0;
    spec.seed = 4242;
    spec.rates.kind = RateSpec::Kind::Constant;
    spec.rates.constant = 50.0;
    const SpikeTrace t = generate_poisson(spec, chip);
    // expectation 5000, sigma = sqrt(5000) ~ 70.7; assert 3 sigma
    CHECK(std::abs(static_cast<double>(t.events.size()) - 5000.0) < 3 * std::sqrt(5000.0));

    // relative error <= 5% once duration*rate >= 1e4
    spec.rates.constant = 100.0;
    const SpikeTrace dense = generate_poisson(spec, chip);
    const double n = static_cast<double>(dense.events.size());
    CHECK(std::abs(n - 10000.0) / 10000.0 <= 0.05);
}

TEST_CASE("trace_stats") {
    SpikeTrace t;
    t.duration = 1 * kNsPerSecond;
    for (int i = 0; i < 10; ++i)
        t.events.push_back({i * kNsPerSecond / 10, 0, 0});
    const TraceStats one = trace_stats(t);
    REQUIRE(one.per_neuron.size() == 1);
    CHECK(one.per_neuron[0].count == 10);
    CHECK(one.per_neuron[0].rate_avg == doctest::Approx(10.0));

    // two neurons at 10 Hz and 30 Hz: min 10, max 30, avg 20 across neurons
    SpikeTrace two;
    two.duration = 1 * kNsPerSecond;
    std::vector<SpikeEvent> evs;
    for (int i = 0; i < 10; ++i) evs.push_back({i * kNsPerSecond / 10, 0, 0});
    for (int i = 0; i < 30; ++i) evs.push_back({i * kNsPerSecond / 30, 0, 1});
    two.events = aer_encode(evs);
    const TraceStats pair = trace_stats(two);
    CHECK(pair.rate_min == doctest::Approx(10.0));
    CHECK(pair.rate_max == doctest::Approx(30.0));
    CHECK(pair.rate_avg == doctest::Approx(20.0));
    CHECK(std::accumulate(pair.histogram.begin(), pair.histogram.end(), 0ull) == 2);

    CHECK(trace_stats(SpikeTrace{}).per_neuron.empty());  // empty-stats sentinel
}

TEST_CASE("trace_stats on a uniform synthetic trace") {
    ChipConfig chip;
    chip.num_tiles = 1;
    chip.neurons_per_tile = 64;
    PoissonWorkloadSpec spec;
    spec.duration = 100.0;
    spec.seed = 11;
    spec.rates.kind = RateSpec::Kind::Constant;
    spec.rates.constant = 50.0;
    const TraceStats stats = trace_stats(generate_poisson(spec, chip));
    REQUIRE(stats.per_neuron.size() == 64);
    // across-neuron min/avg/max of the mean rates hug the nominal 50 Hz
    CHECK(stats.rate_avg == doctest::Approx(50.0).epsilon(0.02));
    CHECK(stats.rate_min > 40.0);
    CHECK(stats.rate_max < 60.0);
}

TEST_CASE("remap_uniform spreads neurons round-robin") {
    ChipConfig chip;
    chip.num_tiles = 4;
    chip.neurons_per_tile = 4;
    SpikeTrace t;
    // global neuron g = tile*4 + neuron spikes once at time g
    std::vector<SpikeEvent> evs;
    for (std::uint32_t g = 0; g < 16; ++g)
        evs.push_back({static_cast<SimTime>(g) * 1000, g / 4, g % 4});
    t.events = aer_encode(evs);

    const SpikeTrace remapped = remap_uniform(t, chip, 8);
    CHECK(remapped.events.size() == 16);
    for (const SpikeEvent& e : remapped.events) {
        const auto g = static_cast<std::uint32_t>(e.time / 1000);
        CHECK(e.tile == g % 8);
        CHECK(e.neuron == g / 8);
    }

    // per-tile totals flatten as tiles increase
    auto max_tile_count = [&](const SpikeTrace& tr, std::uint32_t tiles) {
        std::vector<std::uint64_t> counts(tiles, 0);
        for (const SpikeEvent& e : tr.events) ++counts[e.tile];
        return *std::max_element(counts.begin(), counts.end());
    };
    CHECK(max_tile_count(remapped, 8) <= max_tile_count(t, 4));

    CHECK_THROWS_AS(remap_uniform(t, chip, 0), ConfigError);
    ChipConfig tight = chip;
    tight.neurons_per_tile = 4;
    CHECK_THROWS_AS(remap_uniform(t, tight, 3), ConfigError);  // ceil(16/3)=6 > 4
}
