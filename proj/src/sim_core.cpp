#include "sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vqsim {

std::int64_t SimTime::llround_positive(double v) {
    return static_cast<std::int64_t>(std::llround(v));
}

EventId Engine::schedule_at(SimTime at, std::function<void()> fn) {
    if (at < now_) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "schedule in the past: at=%lld ns, now=%lld ns",
                      static_cast<long long>(at.ticks),
                      static_cast<long long>(now_.ticks));
        throw contract_violation(std::string(buf) + diagnostic_tail());
    }
    EventId id = next_seq_++;
    states_.push_back(State::pending);
    heap_.push_back(Entry{at.ticks, id, std::move(fn)});
    std::push_heap(heap_.begin(), heap_.end(), EntryLater{});
    return id;
}

bool Engine::cancel(EventId id) {
    if (id >= states_.size() || states_[id] != State::pending) return false;
    states_[id] = State::cancelled;
    return true;
}

std::uint64_t Engine::run_until(SimTime t_end) {
    if (t_end < now_) {
        throw contract_violation("run_until into the past");
    }
    std::uint64_t processed = 0;
    while (!heap_.empty() && heap_.front().at <= t_end.ticks) {
        std::pop_heap(heap_.begin(), heap_.end(), EntryLater{});
        Entry e = std::move(heap_.back());
        heap_.pop_back();
        if (states_[e.seq] == State::cancelled) continue;
        states_[e.seq] = State::fired;
        now_ = SimTime{e.at};
        tail_[tail_count_++ % kTailSize] = {e.at, e.seq};
        if (trace_enabled_) trace_.emplace_back(e.at, e.seq);
        e.fn();
        ++processed;
    }
    now_ = t_end;
    return processed;
}

std::string Engine::diagnostic_tail() const {
    std::string out = "; recent events (fire_at_ns, seq):";
    std::size_t n = std::min(tail_count_, kTailSize);
    for (std::size_t i = 0; i < n; ++i) {
        auto [at, seq] = tail_[(tail_count_ - n + i) % kTailSize];
        char buf[64];
        std::snprintf(buf, sizeof buf, " (%lld,%llu)",
                      static_cast<long long>(at),
                      static_cast<unsigned long long>(seq));
        out += buf;
    }
    if (n == 0) out += " none";
    return out;
}

} // namespace vqsim
