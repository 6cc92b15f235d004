#pragma once

#include "sim_core.hpp"
#include "video_traffic.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace vqsim {

// Logarithmic bitrate-to-MOS map anchored at (r1 -> 1) and (r5 -> 5),
// clamped to [1, 5]. r5 is the knee: every rate at or above it scores the
// maximum.
struct MosCurve {
    double r1_bps = 30'000;
    double r5_bps = 100'000;
};

double mos_from_bitrate(double r_bps, const MosCurve& curve);

// Inverse of the unclamped map, handy for thresholding decisions.
double bitrate_for_mos(double mos, const MosCurve& curve);

// Decode-dependency chain over one sequence of frames (I at positions
// index % gop == 0, P elsewhere): an I is decodable iff delivered, a P iff
// delivered and its predecessor in the GOP is decodable. Returns the
// sorted indices of decodable frames.
std::vector<std::size_t> decodable_frames(const std::vector<bool>& delivered, int gop);

// Empirical CDF: (value, fraction of samples <= value) at each distinct
// sorted value. Empty input yields empty output.
std::vector<std::pair<double, double>> cdf(std::vector<double> values);

enum class JitterEstimator : std::uint8_t {
    mean_abs,     // mean |transit_i - transit_{i-1}|
    rtp_smoothed, // J += (|delta| - J) / 16
};

// Per-frame delivery bookkeeping for one emitted frame.
struct FrameRecord {
    std::int64_t global_index = 0; // grows across trace loops
    FrameType type = FrameType::I;
    std::int64_t size_bytes = 0;
    std::int32_t packets_expected = 0;
    std::int32_t packets_received = 0;
    std::int64_t emit_ticks = 0;
};

// Raw per-session material accumulated during a run; metrics are a pure
// post-processing pass over it.
struct SessionRecord {
    int session_id = -1;
    bool admitted = false;
    SimTime t_start{0};
    SimTime t_end{0};

    std::int64_t sent = 0;
    std::int64_t received = 0;
    std::int64_t dropped = 0;
    std::int64_t received_wire_bytes = 0;

    std::vector<FrameRecord> frames;
    // (t_sent, t_received) of received video packets, in arrival order.
    std::vector<std::pair<std::int64_t, std::int64_t>> recv_log;

    // Streaming jitter/delay accumulators, updated per received packet.
    std::int64_t delay_sum_ns = 0;
    std::int64_t jitter_abs_sum_ns = 0;
    std::int64_t jitter_pairs = 0;
    std::int64_t prev_transit_ns = -1;
    double rtp_jitter_ns = 0.0;

    void on_received_packet(std::int64_t t_sent, std::int64_t t_received);
};

struct SessionMetrics {
    double mean_mos = 1.0;
    double mean_delay_ns = 0.0;
    double mean_jitter_ns = 0.0;
    double drop_ratio = 0.0;
    double decodable_ratio = 0.0;
    bool successful = false;
    std::int64_t decodable_frame_count = 0;
    std::int64_t decodable_wire_bits = 0; // wire-equivalent bits of decodable frames
    std::int64_t delivered_wire_bits = 0; // wire bits of fully delivered frames
};

// (mean_delay, mean_jitter, drop_ratio) from the streaming accumulators.
// Fewer than two received packets define jitter as 0.
void packet_metrics(const SessionRecord& rec, JitterEstimator est, double& mean_delay_ns,
                    double& mean_jitter_ns, double& drop_ratio);

// Session MOS per the decodable-goodput model: for each full active
// second, the effective rate is 8x the bytes of decodable frames emitted
// in that second; the session score is the mean of the per-second MOS.
double session_mos(const SessionRecord& rec, int gop, const MosCurve& curve,
                   std::int64_t max_payload, SessionMetrics* details = nullptr);

bool successful(const SessionRecord& rec, int gop, double delta);

SessionMetrics finalize_session(const SessionRecord& rec, int gop, const MosCurve& curve,
                                std::int64_t max_payload, double success_threshold,
                                JitterEstimator est);

// Delivered share of the capacity-horizon product.
double utilization(std::int64_t wire_bits_delivered, double capacity_bps, double horizon_s);

// Independent single-pass recomputation of the mean-abs jitter sums from
// the raw receive log; used to cross-check the streaming accumulators.
void recompute_jitter(const std::vector<std::pair<std::int64_t, std::int64_t>>& recv_log,
                      std::int64_t& abs_sum_ns, std::int64_t& pairs);

} // namespace vqsim
