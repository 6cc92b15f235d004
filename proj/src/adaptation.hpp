#pragma once

#include "video_traffic.hpp"

#include <cstdint>
#include <deque>
#include <optional>

namespace vqsim {

struct ReceiverReport {
    int session_id = -1;
    std::int64_t interval_end_ns = 0;
    std::int64_t received = 0;
    std::int64_t expected = 0;
    double loss_fraction = 0.0;
    double loss_event_rate = 0.0; // receiver-side smoothed view
    std::int64_t rtt_sample_ns = 0; // filled by the sender on arrival
    double recv_rate_bps = 0.0;

    // Echo of the newest packet seen, so the sender can derive an RTT
    // sample net of the receiver's holding time.
    std::int64_t echo_t_sent_ns = 0;
    std::int64_t echo_hold_ns = 0;
};

// Weighted average over the most-recent-first loss history; weights
// 1,1,1,1,0.8,0.6,0.4,0.2 over a fixed 8-interval window. Intervals not
// yet observed count as loss-free.
double weighted_loss_average(const std::deque<double>& most_recent_first);

inline constexpr std::size_t kLossHistoryLength = 8;

// Receiver-side interval accounting: expected counts derive from sequence
// gaps, and one report is produced per interval in which anything arrived.
class ReceiverState {
public:
    explicit ReceiverState(int session_id) : session_id_(session_id) {}

    void on_packet(std::int64_t seq, std::int64_t t_sent_ns, std::int64_t now_ns,
                   std::int64_t wire_bytes);

    // Closes the interval ending at interval_end_ns. Returns nothing when
    // no packet arrived in the interval.
    std::optional<ReceiverReport> make_report(std::int64_t interval_end_ns,
                                              double interval_s);

private:
    int session_id_;
    std::int64_t max_seq_ = 0;
    std::int64_t prev_max_seq_ = 0;
    std::int64_t recv_in_interval_ = 0;
    std::int64_t bytes_in_interval_ = 0;
    std::int64_t last_arrival_ns_ = 0;
    std::int64_t last_t_sent_ns_ = 0;
    std::deque<double> loss_history_;
};

// TCP-friendly throughput at loss event rate p: the standard equation
// with t_RTO = 4*rtt and segment size s bytes. p = 0 is handled by the
// caller (doubling rule).
double tfrc_equation_bps(std::int64_t segment_bytes, double rtt_s, double p);

// Smallest quantizer whose nominal rate fits the allowed rate; 31 when
// even the floor of the ladder does not fit.
int select_quantizer(double allowed_rate_bps, const ContentParams& content);

enum class RateController : std::uint8_t { tfrc, aimd };

// Sender-side adaptation state. Quantizer changes are staged and applied
// at the next GOP boundary.
class AdaptationState {
public:
    AdaptationState(const ContentParams& content, int start_q, std::int64_t initial_rtt_ns,
                    RateController controller = RateController::tfrc,
                    std::int64_t segment_bytes = 1052);

    int current_q() const { return current_q_; }
    int pending_q() const { return pending_q_; }
    double allowed_rate_bps() const { return allowed_rate_bps_; }
    double smoothed_rtt_s() const { return static_cast<double>(smoothed_rtt_ns_) * 1e-9; }
    double loss_event_rate() const { return loss_event_rate_; }

    // Stale reports (interval_end not newer than the last applied) are
    // ignored and return false.
    bool on_report(const ReceiverReport& report);

    // Called by the source at each GOP boundary.
    void apply_pending() { current_q_ = pending_q_; }

private:
    const ContentParams& content_;
    RateController controller_;
    std::int64_t segment_bytes_;
    int current_q_;
    int pending_q_;
    double allowed_rate_bps_;
    std::int64_t smoothed_rtt_ns_;
    double loss_event_rate_ = 0.0;
    std::int64_t last_interval_end_ns_ = -1;
    std::deque<double> loss_history_;
};

} // namespace vqsim
