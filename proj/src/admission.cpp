#include "admission.hpp"

#include <algorithm>

namespace vqsim {

void LinkMonitor::observe(std::int64_t now_ns, std::int64_t wire_bytes) {
    evict(now_ns);
    samples_.emplace_back(now_ns, wire_bytes);
    bytes_in_window_ += wire_bytes;
}

double LinkMonitor::rate_bps(std::int64_t now_ns) {
    evict(now_ns);
    return static_cast<double>(bytes_in_window_) * 8.0 * 1e9 /
           static_cast<double>(window_ns_);
}

void LinkMonitor::evict(std::int64_t now_ns) {
    const std::int64_t cutoff = now_ns - window_ns_;
    while (!samples_.empty() && samples_.front().first <= cutoff) {
        bytes_in_window_ -= samples_.front().second;
        samples_.pop_front();
    }
}

const char* reject_reason_name(RejectReason reason) {
    switch (reason) {
    case RejectReason::none: return "none";
    case RejectReason::capacity: return "capacity";
    case RejectReason::qoe_below_threshold: return "qoe_below_threshold";
    case RejectReason::session_cap: return "session_cap";
    }
    return "unknown";
}

AdmissionDecision decide(const AdmissionPolicy& policy, double measured_bps,
                         int active_sessions, const ContentParams& content,
                         const MosCurve& curve) {
    AdmissionDecision d;
    d.measured_bps = measured_bps;

    if (policy.gate == AdmissionGate::always_admit) {
        d.admit = true;
        return d;
    }

    if (active_sessions >= policy.max_sessions) {
        d.reason = RejectReason::session_cap;
        return d;
    }

    const double top_rate = nominal_rate_bps(content, kQuantMin);

    if (policy.gate == AdmissionGate::bandwidth_check) {
        if (measured_bps + top_rate <= policy.capacity_bps) {
            d.admit = true;
        } else {
            d.reason = RejectReason::capacity;
        }
        return d;
    }

    // qoe_aware: score the share this session could actually get. A negative
    // residual means the video budget is already spent (capacity), a small
    // positive one means the newcomer would start below the quality bar.
    d.residual_bps = policy.beta * policy.capacity_bps - measured_bps;
    d.predicted_mos = mos_from_bitrate(std::min(d.residual_bps, top_rate), curve);
    d.recommended_q = select_quantizer(d.residual_bps, content);
    if (d.predicted_mos >= policy.theta) {
        d.admit = true;
    } else {
        d.reason = d.residual_bps < 0.0 ? RejectReason::capacity
                                        : RejectReason::qoe_below_threshold;
    }
    return d;
}

} // namespace vqsim
