#pragma once

#include "sim_core.hpp"
#include "video_traffic.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

namespace vqsim {

enum class FlowKind : std::uint8_t { video, ftp, ack, report };

const char* flow_kind_name(FlowKind k);

struct Packet {
    std::uint64_t id = 0;
    std::int32_t session_id = -1;
    FlowKind flow_kind = FlowKind::video;
    std::int64_t wire_bytes = 0;
    std::int64_t payload_bytes = 0;
    std::int64_t seq = 0;
    std::int64_t frame_index = -1; // global frame counter, -1 for non-video
    FrameType frame_type = FrameType::P;
    SimTime t_sent{0};
    SimTime t_received{-1};
};

class Link;

// A fixed route plus the callbacks fired when a packet leaves the network,
// either by final delivery or by a queue drop along the way.
struct Path {
    std::vector<Link*> links;
    std::function<void(Packet&&, SimTime)> deliver;
    std::function<void(const Packet&, SimTime)> on_drop;
};

// Injects the packet at the first link of the path.
void send(const Path& path, Packet&& pkt);

enum class Enqueue { accepted, dropped };

// Point-to-point link with a bounded droptail FIFO. Serialization time is
// ceil(wire_bytes*8*1e9 / rate_bps) ns; at most one packet serializes at a
// time and the next starts the instant the previous one ends.
class Link {
public:
    Link(Engine& eng, std::int64_t rate_bps, SimTime prop_delay, std::size_t queue_capacity);

    Enqueue enqueue(const Path& path, Packet&& pkt, std::size_t hop);

    std::int64_t serialization_ns(std::int64_t wire_bytes) const {
        return (wire_bytes * 8 * 1'000'000'000 + rate_bps_ - 1) / rate_bps_;
    }

    std::size_t occupancy() const { return queue_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::int64_t rate_bps() const { return rate_bps_; }
    SimTime prop_delay() const { return prop_delay_; }

    // Called with every packet presented to the queue, before the
    // accept/drop decision.
    std::function<void(const Packet&, SimTime)> on_arrival;

    struct Stats {
        std::uint64_t accepted = 0;
        std::uint64_t dropped = 0;
        std::uint64_t delivered = 0; // finished traversing this link
        std::int64_t wire_bits_delivered = 0;
        std::size_t max_occupancy = 0;
        std::uint64_t drops_at_full = 0;     // drops observed with queue at capacity
        std::uint64_t fifo_violations = 0;   // exits out of acceptance order
        std::int64_t idle_nonempty_ticks = 0; // idle time while the head waited
    };
    const Stats& stats() const { return stats_; }

    void for_each_in_flight(const std::function<void(const Packet&)>& fn) const;

private:
    struct Transit {
        Packet pkt;
        const Path* path;
        std::size_t hop;
        std::uint64_t accept_index;
        std::int64_t enqueue_t;
    };

    void start_service(Transit&& t);
    void on_tx_complete();
    void on_propagation_end();

    Engine& eng_;
    std::int64_t rate_bps_;
    SimTime prop_delay_;
    std::size_t capacity_;

    std::deque<Transit> queue_;
    std::optional<Transit> in_service_;
    std::deque<Transit> propagating_; // FIFO on the wire
    std::int64_t last_service_end_ = 0;
    std::uint64_t next_accept_index_ = 0;
    Stats stats_;
};

struct DumbbellConfig {
    int n_video = 24;
    int n_ftp = 24;
    std::int64_t bottleneck_rate_bps = 7'000'000;
    SimTime bottleneck_prop = SimTime::millis(10);
    std::int64_t access_rate_bps = 100'000'000;
    SimTime access_prop = SimTime::millis(1);
    std::size_t queue_capacity = 2000;
};

// Dumbbell topology: per-source access links into a shared bottleneck,
// per-sink egress links out of it, and a mirrored reverse direction for
// feedback traffic.
class Dumbbell {
public:
    Dumbbell(Engine& eng, const DumbbellConfig& cfg);

    Path& video_fwd(int i) { return video_fwd_[static_cast<std::size_t>(i)]; }
    Path& video_rev(int i) { return video_rev_[static_cast<std::size_t>(i)]; }
    Path& ftp_fwd(int j) { return ftp_fwd_[static_cast<std::size_t>(j)]; }
    Path& ftp_rev(int j) { return ftp_rev_[static_cast<std::size_t>(j)]; }

    Link& bottleneck() { return *bottleneck_; }
    const Link& bottleneck() const { return *bottleneck_; }
    Link& bottleneck_rev() { return *bottleneck_rev_; }

    void for_each_in_flight(const std::function<void(const Packet&)>& fn) const;

    // Aggregated across every link in the topology.
    Link::Stats aggregate_stats() const;

private:
    std::deque<Link> links_; // stable addresses
    Link* bottleneck_ = nullptr;
    Link* bottleneck_rev_ = nullptr;
    std::vector<Path> video_fwd_, video_rev_, ftp_fwd_, ftp_rev_;
};

} // namespace vqsim
