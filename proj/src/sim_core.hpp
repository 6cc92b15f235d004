#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqsim {

// Virtual time, integer nanoseconds since simulation start. Integer ticks
// keep runs bit-reproducible; fractional inputs round half-up at the
// conversion boundary.
struct SimTime {
    std::int64_t ticks = 0;

    static constexpr SimTime nanos(std::int64_t ns) { return SimTime{ns}; }
    static SimTime millis(double ms) { return SimTime{llround_positive(ms * 1e6)}; }
    static SimTime seconds(double s) { return SimTime{llround_positive(s * 1e9)}; }

    double as_seconds() const { return static_cast<double>(ticks) * 1e-9; }

    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ticks + b.ticks}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ticks - b.ticks}; }
    friend constexpr auto operator<=>(SimTime a, SimTime b) = default;

    SimTime& operator+=(SimTime o) { ticks += o.ticks; return *this; }

private:
    static std::int64_t llround_positive(double v);
};

class contract_violation : public std::logic_error {
public:
    explicit contract_violation(const std::string& what) : std::logic_error(what) {}
};

using EventId = std::uint64_t;

// Single-threaded discrete-event engine. Events fire ordered by
// (fire_at, insertion_seq); ties resolve in insertion order so a run is a
// pure function of the schedule calls made against it.
class Engine {
public:
    Engine() = default;
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    SimTime now() const { return now_; }

    // Scheduling in the past is a contract violation and throws.
    EventId schedule_at(SimTime at, std::function<void()> fn);
    EventId schedule_in(SimTime delay, std::function<void()> fn) {
        return schedule_at(now_ + delay, std::move(fn));
    }

    // True if the event was pending and is now suppressed; false if it
    // already fired or was already cancelled.
    bool cancel(EventId id);

    // Processes every event with fire_at <= t_end, then advances the clock
    // to t_end. Returns the number of events processed.
    std::uint64_t run_until(SimTime t_end);

    std::uint64_t scheduled_count() const { return next_seq_; }

    // Test hook: when enabled, records (fire_at, seq) of every processed
    // event.
    void enable_trace(bool on) { trace_enabled_ = on; }
    const std::vector<std::pair<std::int64_t, EventId>>& trace() const { return trace_; }

private:
    enum class State : std::uint8_t { pending, fired, cancelled };

    struct Entry {
        std::int64_t at;
        EventId seq;
        std::function<void()> fn;
    };

    struct EntryLater {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    std::string diagnostic_tail() const;

    SimTime now_{0};
    EventId next_seq_ = 0;
    std::vector<Entry> heap_;
    std::vector<State> states_;
    bool trace_enabled_ = false;
    std::vector<std::pair<std::int64_t, EventId>> trace_;

    // Ring buffer of recently processed (fire_at, seq), for diagnostics.
    static constexpr std::size_t kTailSize = 8;
    std::pair<std::int64_t, EventId> tail_[kTailSize] = {};
    std::size_t tail_count_ = 0;
};

} // namespace vqsim
