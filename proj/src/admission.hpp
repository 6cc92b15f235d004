#pragma once

#include "adaptation.hpp"
#include "qoe_metrics.hpp"
#include "video_traffic.hpp"

#include <cstdint>
#include <deque>
#include <utility>

namespace vqsim {

// Sliding-window byte counter over video arrivals at the bottleneck
// ingress. Arrivals are counted before the queue's accept/drop decision.
class LinkMonitor {
public:
    explicit LinkMonitor(std::int64_t window_ns) : window_ns_(window_ns) {}

    void observe(std::int64_t now_ns, std::int64_t wire_bytes);

    // Evicts samples older than the window, then reports the windowed rate.
    double rate_bps(std::int64_t now_ns);

private:
    void evict(std::int64_t now_ns);

    std::int64_t window_ns_;
    std::deque<std::pair<std::int64_t, std::int64_t>> samples_;
    std::int64_t bytes_in_window_ = 0;
};

enum class AdmissionGate : std::uint8_t { always_admit, bandwidth_check, qoe_aware };

enum class RejectReason : std::uint8_t { none, capacity, qoe_below_threshold, session_cap };

const char* reject_reason_name(RejectReason reason);

struct AdmissionPolicy {
    AdmissionGate gate = AdmissionGate::bandwidth_check;
    double capacity_bps = 7e6;
    double beta = 0.9;       // qoe_aware headroom factor
    double theta = 3.5;      // minimum acceptable predicted score
    int max_sessions = 24;
};

struct AdmissionDecision {
    bool admit = false;
    RejectReason reason = RejectReason::none;
    double measured_bps = 0.0;
    double residual_bps = 0.0;  // qoe_aware only
    double predicted_mos = 0.0; // qoe_aware only
    int recommended_q = kQuantMin;
};

// Pure decision over the given measurement and session count; the caller
// owns the monitor and the session table. bandwidth_check admits while the
// measured rate plus one top-quality stream fits the raw capacity;
// qoe_aware admits while the score predicted from the residual share of
// beta*capacity clears theta, and recommends the quantizer that fits it.
AdmissionDecision decide(const AdmissionPolicy& policy, double measured_bps,
                         int active_sessions, const ContentParams& content,
                         const MosCurve& curve);

} // namespace vqsim
