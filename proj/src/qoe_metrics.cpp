#include "qoe_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace vqsim {

double mos_from_bitrate(double r_bps, const MosCurve& curve) {
    if (r_bps <= curve.r1_bps) return 1.0;
    if (r_bps >= curve.r5_bps) return 5.0;
    double mos = 1.0 + 4.0 * std::log(r_bps / curve.r1_bps) / std::log(curve.r5_bps / curve.r1_bps);
    return std::clamp(mos, 1.0, 5.0);
}

double bitrate_for_mos(double mos, const MosCurve& curve) {
    return curve.r1_bps * std::pow(curve.r5_bps / curve.r1_bps, (mos - 1.0) / 4.0);
}

std::vector<std::size_t> decodable_frames(const std::vector<bool>& delivered, int gop) {
    std::vector<std::size_t> out;
    bool chain_alive = false;
    for (std::size_t i = 0; i < delivered.size(); ++i) {
        bool is_i = (i % static_cast<std::size_t>(gop)) == 0;
        if (is_i) {
            chain_alive = delivered[i];
        } else {
            chain_alive = chain_alive && delivered[i];
        }
        if (chain_alive) out.push_back(i);
    }
    return out;
}

std::vector<std::pair<double, double>> cdf(std::vector<double> values) {
    std::vector<std::pair<double, double>> out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.emplace_back(values[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

void SessionRecord::on_received_packet(std::int64_t t_sent_ns, std::int64_t t_received_ns) {
    ++received;
    recv_log.emplace_back(t_sent_ns, t_received_ns);
    std::int64_t transit = t_received_ns - t_sent_ns;
    delay_sum_ns += transit;
    if (prev_transit_ns >= 0) {
        std::int64_t delta = std::llabs(transit - prev_transit_ns);
        jitter_abs_sum_ns += delta;
        ++jitter_pairs;
        rtp_jitter_ns += (static_cast<double>(delta) - rtp_jitter_ns) / 16.0;
    }
    prev_transit_ns = transit;
}

void packet_metrics(const SessionRecord& rec, JitterEstimator est, double& mean_delay_ns,
                    double& mean_jitter_ns, double& drop_ratio) {
    mean_delay_ns = rec.received > 0
                        ? static_cast<double>(rec.delay_sum_ns) / static_cast<double>(rec.received)
                        : 0.0;
    if (rec.jitter_pairs > 0) {
        mean_jitter_ns = est == JitterEstimator::mean_abs
                             ? static_cast<double>(rec.jitter_abs_sum_ns) /
                                   static_cast<double>(rec.jitter_pairs)
                             : rec.rtp_jitter_ns;
    } else {
        mean_jitter_ns = 0.0;
    }
    drop_ratio = rec.sent > 0
                     ? static_cast<double>(rec.dropped) / static_cast<double>(rec.sent)
                     : 0.0;
}

namespace {

// Walks the frame list once, yielding per-frame decodability through the
// GOP chain. The recorded frame type drives the chain so content whose
// length is not a GOP multiple still resets at each pass boundary.
template <typename Fn>
void walk_decodable(const std::vector<FrameRecord>& frames, int /*gop*/, Fn&& fn) {
    bool chain_alive = false;
    for (const auto& f : frames) {
        bool delivered = f.packets_received == f.packets_expected && f.packets_expected > 0;
        if (f.type == FrameType::I) {
            chain_alive = delivered;
        } else {
            chain_alive = chain_alive && delivered;
        }
        fn(f, delivered, chain_alive);
    }
}

} // namespace

double session_mos(const SessionRecord& rec, int gop, const MosCurve& curve,
                   std::int64_t max_payload, SessionMetrics* details) {
    const std::int64_t active_ns = rec.t_end.ticks - rec.t_start.ticks;
    std::int64_t full_seconds = active_ns / 1'000'000'000;
    if (full_seconds <= 0) full_seconds = rec.frames.empty() ? 0 : 1;

    std::vector<std::int64_t> bytes_per_second(static_cast<std::size_t>(full_seconds), 0);
    std::int64_t decodable_count = 0;
    std::int64_t decodable_bits = 0;
    std::int64_t delivered_bits = 0;
    walk_decodable(rec.frames, gop, [&](const FrameRecord& f, bool delivered, bool decodable) {
        if (delivered) delivered_bits += frame_wire_bytes(f.size_bytes, max_payload) * 8;
        if (!decodable) return;
        ++decodable_count;
        decodable_bits += frame_wire_bytes(f.size_bytes, max_payload) * 8;
        std::int64_t second = (f.emit_ticks - rec.t_start.ticks) / 1'000'000'000;
        if (second >= 0 && second < full_seconds) {
            bytes_per_second[static_cast<std::size_t>(second)] += f.size_bytes;
        }
    });

    double mos_sum = 0.0;
    for (std::int64_t b : bytes_per_second) {
        mos_sum += mos_from_bitrate(static_cast<double>(b) * 8.0, curve);
    }
    double mean = full_seconds > 0 ? mos_sum / static_cast<double>(full_seconds) : 1.0;

    if (details) {
        details->decodable_frame_count = decodable_count;
        details->decodable_wire_bits = decodable_bits;
        details->delivered_wire_bits = delivered_bits;
        details->decodable_ratio =
            rec.frames.empty() ? 0.0
                               : static_cast<double>(decodable_count) /
                                     static_cast<double>(rec.frames.size());
    }
    return mean;
}

bool successful(const SessionRecord& rec, int gop, double delta) {
    if (rec.received < 1 || rec.frames.empty()) return false;
    std::int64_t decodable_count = 0;
    walk_decodable(rec.frames, gop, [&](const FrameRecord&, bool, bool decodable) {
        if (decodable) ++decodable_count;
    });
    double ratio = static_cast<double>(decodable_count) / static_cast<double>(rec.frames.size());
    return ratio >= delta;
}

SessionMetrics finalize_session(const SessionRecord& rec, int gop, const MosCurve& curve,
                                std::int64_t max_payload, double success_threshold,
                                JitterEstimator est) {
    SessionMetrics m;
    m.mean_mos = session_mos(rec, gop, curve, max_payload, &m);
    packet_metrics(rec, est, m.mean_delay_ns, m.mean_jitter_ns, m.drop_ratio);
    m.successful = rec.received >= 1 && !rec.frames.empty() &&
                   m.decodable_ratio >= success_threshold;
    return m;
}

double utilization(std::int64_t wire_bits_delivered, double capacity_bps, double horizon_s) {
    return static_cast<double>(wire_bits_delivered) / (capacity_bps * horizon_s);
}

void recompute_jitter(const std::vector<std::pair<std::int64_t, std::int64_t>>& recv_log,
                      std::int64_t& abs_sum_ns, std::int64_t& pairs) {
    abs_sum_ns = 0;
    pairs = 0;
    for (std::size_t i = 1; i < recv_log.size(); ++i) {
        std::int64_t d_prev = recv_log[i - 1].second - recv_log[i - 1].first;
        std::int64_t d_cur = recv_log[i].second - recv_log[i].first;
        abs_sum_ns += std::llabs(d_cur - d_prev);
        ++pairs;
    }
}

} // namespace vqsim
