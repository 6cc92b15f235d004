#include "adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace vqsim {

double weighted_loss_average(const std::deque<double>& most_recent_first) {
    static constexpr double kWeights[kLossHistoryLength] = {1.0, 1.0, 1.0, 1.0,
                                                            0.8, 0.6, 0.4, 0.2};
    // The window is a fixed 8 intervals; a young flow's unseen intervals
    // count as loss-free, so the denominator is always the full weight sum.
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < kLossHistoryLength; ++i) {
        if (i < most_recent_first.size()) num += kWeights[i] * most_recent_first[i];
        den += kWeights[i];
    }
    return num / den;
}

void ReceiverState::on_packet(std::int64_t seq, std::int64_t t_sent_ns, std::int64_t now_ns,
                              std::int64_t wire_bytes) {
    max_seq_ = std::max(max_seq_, seq);
    ++recv_in_interval_;
    bytes_in_interval_ += wire_bytes;
    last_arrival_ns_ = now_ns;
    last_t_sent_ns_ = t_sent_ns;
}

std::optional<ReceiverReport> ReceiverState::make_report(std::int64_t interval_end_ns,
                                                         double interval_s) {
    if (recv_in_interval_ == 0) return std::nullopt;

    ReceiverReport r;
    r.session_id = session_id_;
    r.interval_end_ns = interval_end_ns;
    r.received = recv_in_interval_;
    r.expected = std::max(max_seq_ - prev_max_seq_, recv_in_interval_);
    r.loss_fraction = static_cast<double>(r.expected - r.received) /
                      static_cast<double>(std::max<std::int64_t>(r.expected, 1));
    loss_history_.push_front(r.loss_fraction);
    if (loss_history_.size() > kLossHistoryLength) loss_history_.pop_back();
    r.loss_event_rate = weighted_loss_average(loss_history_);
    r.recv_rate_bps = static_cast<double>(bytes_in_interval_) * 8.0 / interval_s;
    r.echo_t_sent_ns = last_t_sent_ns_;
    r.echo_hold_ns = interval_end_ns - last_arrival_ns_;

    prev_max_seq_ = max_seq_;
    recv_in_interval_ = 0;
    bytes_in_interval_ = 0;
    return r;
}

double tfrc_equation_bps(std::int64_t segment_bytes, double rtt_s, double p) {
    double t_rto = 4.0 * rtt_s;
    double denom = rtt_s * std::sqrt(2.0 * p / 3.0) +
                   t_rto * 3.0 * std::sqrt(3.0 * p / 8.0) * p * (1.0 + 32.0 * p * p);
    return 8.0 * static_cast<double>(segment_bytes) / denom;
}

int select_quantizer(double allowed_rate_bps, const ContentParams& content) {
    for (int q = kQuantMin; q <= kQuantMax; ++q) {
        if (nominal_rate_bps(content, q) <= allowed_rate_bps) return q;
    }
    return kQuantMax;
}

AdaptationState::AdaptationState(const ContentParams& content, int start_q,
                                 std::int64_t initial_rtt_ns, RateController controller,
                                 std::int64_t segment_bytes)
    : content_(content),
      controller_(controller),
      segment_bytes_(segment_bytes),
      current_q_(start_q),
      pending_q_(start_q),
      allowed_rate_bps_(nominal_rate_bps(content, start_q)),
      smoothed_rtt_ns_(initial_rtt_ns) {}

bool AdaptationState::on_report(const ReceiverReport& report) {
    if (report.interval_end_ns <= last_interval_end_ns_) return false;
    last_interval_end_ns_ = report.interval_end_ns;

    if (report.rtt_sample_ns > 0) {
        smoothed_rtt_ns_ += (report.rtt_sample_ns - smoothed_rtt_ns_) / 8;
    }

    loss_history_.push_front(report.loss_fraction);
    if (loss_history_.size() > kLossHistoryLength) loss_history_.pop_back();
    loss_event_rate_ = weighted_loss_average(loss_history_);

    if (controller_ == RateController::aimd) {
        if (report.loss_fraction > 0.0) {
            pending_q_ = std::min(kQuantMax,
                                  static_cast<int>(std::llround(current_q_ * 1.25)));
        } else {
            pending_q_ = std::max(kQuantMin, current_q_ - 1);
        }
        allowed_rate_bps_ = nominal_rate_bps(content_, pending_q_);
        return true;
    }

    const double top_rate = nominal_rate_bps(content_, kQuantMin);
    if (loss_event_rate_ <= 0.0) {
        allowed_rate_bps_ = std::min(2.0 * allowed_rate_bps_, top_rate);
    } else {
        allowed_rate_bps_ =
            tfrc_equation_bps(segment_bytes_, smoothed_rtt_s(), loss_event_rate_);
    }
    pending_q_ = select_quantizer(allowed_rate_bps_, content_);
    return true;
}

} // namespace vqsim
