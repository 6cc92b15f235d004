#pragma once

#include "netmodel.hpp"
#include "sim_core.hpp"

#include <cstdint>
#include <map>
#include <set>

namespace vqsim {

enum class TcpPhase : std::uint8_t { slow_start, congestion_avoidance };

// Window state of one greedy background sender. in_flight() can exceed the
// window transiently after a reduction; the window bounds emission, and
// only acks shrink what is already outstanding.
struct TcpLikeState {
    double cwnd = 2.0;      // packets, fractional in congestion avoidance
    double ssthresh = 64.0; // packets
    std::int64_t snd_una = 0;
    std::int64_t next_seq = 0;
    int dup_acks = 0;
    SimTime rto = SimTime::seconds(1.0);
    TcpPhase phase = TcpPhase::slow_start;

    std::int64_t in_flight() const { return next_seq - snd_una; }
};

// Persistent FTP source with AIMD congestion control: slow start, additive
// increase, fast retransmit on the 3rd duplicate ack, timeout with
// exponential backoff (cap 60 s). The retransmission timeout tracks the
// measured round trip (EWMA srtt + 4*rttvar, floor 1 s); samples follow
// Karn's rule, so retransmitted segments never feed the estimator.
// Segments are 1052 B on the wire; acks are cumulative and ride the
// reverse path. The flow binds the deliver callbacks of both paths it is
// given.
class FtpFlow {
public:
    FtpFlow(Engine& eng, int flow_id, Path& data_path, Path& ack_path,
            std::uint64_t* packet_id_counter, std::int64_t segment_wire_bytes = 1052);

    void start(SimTime when);

    const TcpLikeState& state() const { return st_; }
    std::int64_t receiver_next_expected() const { return rcv_next_; }
    std::uint64_t segments_sent() const { return segments_sent_; }
    std::uint64_t segments_delivered() const { return segments_delivered_; }
    std::uint64_t segments_dropped() const { return segments_dropped_; }
    std::uint64_t retransmits() const { return retransmits_; }
    std::uint64_t acks_sent() const { return acks_sent_; }
    std::uint64_t acks_received() const { return acks_received_; }
    std::uint64_t acks_dropped() const { return acks_dropped_; }
    std::uint64_t timeouts() const { return timeouts_; }

private:
    void try_send(SimTime now);
    void emit_segment(std::int64_t seq, SimTime now);
    void arm_timer(SimTime now);
    void on_timer(SimTime now);
    void on_segment_delivered(const Packet& pkt, SimTime now);
    void on_ack_packet(const Packet& pkt, SimTime now);
    void send_ack(SimTime now);

    Engine& eng_;
    int flow_id_;
    Path& data_path_;
    Path& ack_path_;
    std::uint64_t* packet_id_counter_;
    std::int64_t segment_wire_bytes_;

    TcpLikeState st_;
    bool active_ = false;
    bool fast_rtx_armed_ = true;

    bool timer_pending_ = false;
    std::int64_t timer_deadline_ns_ = 0;
    static constexpr std::int64_t kMinRtoNs = 1'000'000'000;
    static constexpr std::int64_t kMaxRtoNs = 60'000'000'000;

    // RTO estimator state. srtt_ns_ < 0 means no sample yet (rto stays at
    // its initial value until the first valid sample arrives).
    std::int64_t srtt_ns_ = -1;
    std::int64_t rttvar_ns_ = 0;

    void note_rtt_sample(std::int64_t sample_ns);

    struct SegMeta {
        std::int64_t t_first_sent_ns;
        bool retransmitted;
    };
    std::map<std::int64_t, SegMeta> outstanding_;

    // Receiver side: cumulative progress plus the out-of-order buffer.
    std::int64_t rcv_next_ = 0;
    std::set<std::int64_t> rcv_ooo_;

    std::uint64_t segments_sent_ = 0;
    std::uint64_t segments_delivered_ = 0;
    std::uint64_t segments_dropped_ = 0;
    std::uint64_t retransmits_ = 0;
    std::uint64_t acks_sent_ = 0;
    std::uint64_t acks_received_ = 0;
    std::uint64_t acks_dropped_ = 0;
    std::uint64_t timeouts_ = 0;
};

} // namespace vqsim
