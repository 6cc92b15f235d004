#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sim_core.hpp"

#include <random>
#include <vector>

using namespace vqsim;

TEST_CASE("events fire in time order regardless of insertion order") {
    Engine eng;
    std::vector<int> order;
    eng.schedule_at(SimTime::nanos(300), [&] { order.push_back(3); });
    eng.schedule_at(SimTime::nanos(100), [&] { order.push_back(1); });
    eng.schedule_at(SimTime::nanos(200), [&] { order.push_back(2); });

    auto n = eng.run_until(SimTime::nanos(1000));
    CHECK(n == 3);
    CHECK(order == std::vector<int>{1, 2, 3});
    CHECK(eng.now().ticks == 1000);
}

TEST_CASE("simultaneous events fire in insertion order") {
    Engine eng;
    std::vector<int> order;
    for (int i = 0; i < 16; ++i)
        eng.schedule_at(SimTime::nanos(50), [&order, i] { order.push_back(i); });

    eng.run_until(SimTime::nanos(50));
    REQUIRE(order.size() == 16);
    for (int i = 0; i < 16; ++i) CHECK(order[i] == i);
}

TEST_CASE("tie order is insertion order even interleaved with other times") {
    // Randomized schedule against a stable-sort oracle.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> pick_t(0, 9);

    Engine eng;
    eng.enable_trace(true);
    std::vector<std::pair<std::int64_t, EventId>> expected;
    for (int i = 0; i < 200; ++i) {
        auto t = pick_t(rng);
        auto id = eng.schedule_at(SimTime::nanos(t), [] {});
        expected.emplace_back(t, id);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](auto& a, auto& b) { return a.first < b.first; });

    eng.run_until(SimTime::nanos(9));
    CHECK(eng.trace() == expected);
}

TEST_CASE("run_until returns the number of events processed and advances the clock") {
    Engine eng;
    int fired = 0;
    eng.schedule_at(SimTime::nanos(10), [&] { ++fired; });
    eng.schedule_at(SimTime::nanos(20), [&] { ++fired; });
    eng.schedule_at(SimTime::nanos(30), [&] { ++fired; });

    CHECK(eng.run_until(SimTime::nanos(20)) == 2); // boundary event included
    CHECK(fired == 2);
    CHECK(eng.now().ticks == 20);

    CHECK(eng.run_until(SimTime::nanos(25)) == 0); // clock moves with no events
    CHECK(eng.now().ticks == 25);

    CHECK(eng.run_until(SimTime::nanos(100)) == 1);
    CHECK(fired == 3);
    CHECK(eng.now().ticks == 100);
}

TEST_CASE("handlers can schedule at the current instant and still run this pass") {
    Engine eng;
    std::vector<int> order;
    eng.schedule_at(SimTime::nanos(5), [&] {
        order.push_back(0);
        eng.schedule_at(eng.now(), [&] { order.push_back(1); });
    });
    auto n = eng.run_until(SimTime::nanos(5));
    CHECK(n == 2);
    CHECK(order == std::vector<int>{0, 1});
}

TEST_CASE("scheduling in the past throws contract_violation") {
    Engine eng;
    eng.schedule_at(SimTime::nanos(10), [] {});
    eng.run_until(SimTime::nanos(10));
    CHECK_THROWS_AS(eng.schedule_at(SimTime::nanos(9), [] {}), contract_violation);
    // The present is fine.
    CHECK_NOTHROW(eng.schedule_at(SimTime::nanos(10), [] {}));
}

TEST_CASE("cancel suppresses a pending event exactly once") {
    Engine eng;
    int fired = 0;
    auto id = eng.schedule_at(SimTime::nanos(10), [&] { ++fired; });
    CHECK(eng.cancel(id));
    CHECK_FALSE(eng.cancel(id)); // already cancelled
    eng.run_until(SimTime::nanos(20));
    CHECK(fired == 0);

    auto id2 = eng.schedule_at(SimTime::nanos(30), [&] { ++fired; });
    eng.run_until(SimTime::nanos(30));
    CHECK(fired == 1);
    CHECK_FALSE(eng.cancel(id2)); // already fired
}

TEST_CASE("cancelled events do not appear in the trace or the count") {
    Engine eng;
    eng.enable_trace(true);
    eng.schedule_at(SimTime::nanos(1), [] {});
    auto id = eng.schedule_at(SimTime::nanos(2), [] {});
    eng.schedule_at(SimTime::nanos(3), [] {});
    eng.cancel(id);

    CHECK(eng.run_until(SimTime::nanos(10)) == 2);
    REQUIRE(eng.trace().size() == 2);
    CHECK(eng.trace()[0].first == 1);
    CHECK(eng.trace()[1].first == 3);
}

TEST_CASE("schedule_in is relative to the current clock") {
    Engine eng;
    eng.schedule_at(SimTime::nanos(100), [] {});
    eng.run_until(SimTime::nanos(100));

    std::int64_t fired_at = -1;
    eng.schedule_in(SimTime::nanos(40), [&] { fired_at = eng.now().ticks; });
    eng.run_until(SimTime::nanos(1000));
    CHECK(fired_at == 140);
}

TEST_CASE("SimTime conversions round half-up and compose") {
    CHECK(SimTime::millis(1.0).ticks == 1'000'000);
    CHECK(SimTime::seconds(0.5).ticks == 500'000'000);
    CHECK(SimTime::seconds(33.333333333).ticks == 33'333'333'333);
    CHECK((SimTime::nanos(3) + SimTime::nanos(4)).ticks == 7);
    CHECK((SimTime::nanos(9) - SimTime::nanos(4)).ticks == 5);
    CHECK(SimTime::nanos(2) < SimTime::nanos(3));
    CHECK(SimTime::seconds(1.0).as_seconds() == doctest::Approx(1.0));
}

TEST_CASE("a run is a pure function of its schedule calls") {
    auto drive = [] {
        Engine eng;
        eng.enable_trace(true);
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<std::int64_t> pick_t(0, 1000);
        for (int i = 0; i < 500; ++i) {
            auto t = pick_t(rng);
            eng.schedule_at(SimTime::nanos(t), [] {});
        }
        eng.run_until(SimTime::nanos(1000));
        return eng.trace();
    };
    CHECK(drive() == drive());
}
