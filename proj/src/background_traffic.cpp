#include "background_traffic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace vqsim {

FtpFlow::FtpFlow(Engine& eng, int flow_id, Path& data_path, Path& ack_path,
                 std::uint64_t* packet_id_counter, std::int64_t segment_wire_bytes)
    : eng_(eng),
      flow_id_(flow_id),
      data_path_(data_path),
      ack_path_(ack_path),
      packet_id_counter_(packet_id_counter),
      segment_wire_bytes_(segment_wire_bytes) {
    data_path_.deliver = [this](Packet&& pkt, SimTime now) { on_segment_delivered(pkt, now); };
    data_path_.on_drop = [this](const Packet&, SimTime) { ++segments_dropped_; };
    ack_path_.deliver = [this](Packet&& pkt, SimTime now) { on_ack_packet(pkt, now); };
    ack_path_.on_drop = [this](const Packet&, SimTime) { ++acks_dropped_; };
}

void FtpFlow::start(SimTime when) {
    eng_.schedule_at(when, [this] {
        active_ = true;
        try_send(eng_.now());
    });
}

void FtpFlow::try_send(SimTime now) {
    if (!active_) return;
    while (static_cast<double>(st_.in_flight()) < st_.cwnd) {
        emit_segment(st_.next_seq, now);
        ++st_.next_seq;
    }
    if (st_.in_flight() > 0) arm_timer(now);
}

void FtpFlow::emit_segment(std::int64_t seq, SimTime now) {
    auto [it, fresh] = outstanding_.try_emplace(seq, SegMeta{now.ticks, false});
    if (!fresh) it->second.retransmitted = true; // Karn: sample no longer valid
    Packet pkt;
    pkt.id = (*packet_id_counter_)++;
    pkt.session_id = flow_id_;
    pkt.flow_kind = FlowKind::ftp;
    pkt.wire_bytes = segment_wire_bytes_;
    pkt.payload_bytes = segment_wire_bytes_ - kPacketHeaderBytes;
    pkt.seq = seq;
    pkt.t_sent = now;
    ++segments_sent_;
    send(data_path_, std::move(pkt));
}

void FtpFlow::note_rtt_sample(std::int64_t sample_ns) {
    if (sample_ns < 1) sample_ns = 1;
    if (srtt_ns_ < 0) {
        srtt_ns_ = sample_ns;
        rttvar_ns_ = sample_ns / 2;
    } else {
        const std::int64_t err = std::llabs(srtt_ns_ - sample_ns);
        rttvar_ns_ = (3 * rttvar_ns_ + err) / 4;
        srtt_ns_ = (7 * srtt_ns_ + sample_ns) / 8;
    }
    const std::int64_t rto = std::clamp(srtt_ns_ + 4 * rttvar_ns_, kMinRtoNs, kMaxRtoNs);
    st_.rto = SimTime{rto};
}

void FtpFlow::arm_timer(SimTime now) {
    timer_deadline_ns_ = now.ticks + st_.rto.ticks;
    if (timer_pending_) return;
    timer_pending_ = true;
    eng_.schedule_at(SimTime{timer_deadline_ns_}, [this] { on_timer(eng_.now()); });
}

void FtpFlow::on_timer(SimTime now) {
    timer_pending_ = false;
    if (st_.in_flight() == 0) return; // re-armed by the next emission
    if (now.ticks < timer_deadline_ns_) {
        // Deadline moved while this event was in flight; check again then.
        timer_pending_ = true;
        eng_.schedule_at(SimTime{timer_deadline_ns_}, [this] { on_timer(eng_.now()); });
        return;
    }
    ++timeouts_;
    st_.ssthresh = std::max(st_.cwnd / 2.0, 2.0);
    st_.cwnd = 1.0;
    st_.phase = TcpPhase::slow_start;
    st_.dup_acks = 0;
    st_.rto = SimTime{std::min(st_.rto.ticks * 2, kMaxRtoNs)};
    ++retransmits_;
    emit_segment(st_.snd_una, now);
    arm_timer(now);
}

void FtpFlow::on_segment_delivered(const Packet& pkt, SimTime now) {
    ++segments_delivered_;
    if (pkt.seq == rcv_next_) {
        ++rcv_next_;
        while (!rcv_ooo_.empty() && *rcv_ooo_.begin() == rcv_next_) {
            rcv_ooo_.erase(rcv_ooo_.begin());
            ++rcv_next_;
        }
    } else if (pkt.seq > rcv_next_) {
        rcv_ooo_.insert(pkt.seq);
    }
    send_ack(now);
}

void FtpFlow::send_ack(SimTime now) {
    Packet ack;
    ack.id = (*packet_id_counter_)++;
    ack.session_id = flow_id_;
    ack.flow_kind = FlowKind::ack;
    ack.wire_bytes = kFeedbackWireBytes;
    ack.payload_bytes = kFeedbackWireBytes - kPacketHeaderBytes;
    ack.seq = rcv_next_; // cumulative: next segment expected
    ack.t_sent = now;
    ++acks_sent_;
    send(ack_path_, std::move(ack));
}

void FtpFlow::on_ack_packet(const Packet& pkt, SimTime now) {
    ++acks_received_;
    const std::int64_t ack_next = pkt.seq;
    if (ack_next > st_.snd_una) {
        // Newest covered segment that was never retransmitted gives the RTT
        // sample; recomputing the rto from it also clears timeout backoff.
        std::int64_t sample = -1;
        for (auto it = outstanding_.begin();
             it != outstanding_.end() && it->first < ack_next;
             it = outstanding_.erase(it)) {
            if (!it->second.retransmitted) sample = now.ticks - it->second.t_first_sent_ns;
        }
        if (sample >= 0) note_rtt_sample(sample);
        st_.snd_una = ack_next;
        st_.dup_acks = 0;
        fast_rtx_armed_ = true;
        if (st_.in_flight() > 0) arm_timer(now);
        if (st_.phase == TcpPhase::slow_start) {
            st_.cwnd += 1.0;
            if (st_.cwnd >= st_.ssthresh) st_.phase = TcpPhase::congestion_avoidance;
        } else {
            st_.cwnd += 1.0 / st_.cwnd;
        }
        try_send(now);
        return;
    }
    if (ack_next < st_.snd_una || st_.in_flight() == 0) return; // stale
    if (st_.dup_acks < 3) ++st_.dup_acks;
    if (st_.dup_acks == 3 && fast_rtx_armed_) {
        fast_rtx_armed_ = false;
        st_.ssthresh = std::max(st_.cwnd / 2.0, 2.0);
        st_.cwnd = st_.ssthresh;
        st_.phase = TcpPhase::congestion_avoidance;
        ++retransmits_;
        emit_segment(st_.snd_una, now);
        arm_timer(now);
    }
}

} // namespace vqsim
