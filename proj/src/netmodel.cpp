#include "netmodel.hpp"

#include <algorithm>

namespace vqsim {

const char* flow_kind_name(FlowKind k) {
    switch (k) {
    case FlowKind::video: return "video";
    case FlowKind::ftp: return "ftp";
    case FlowKind::ack: return "ack";
    case FlowKind::report: return "report";
    }
    return "?";
}

void send(const Path& path, Packet&& pkt) {
    path.links.front()->enqueue(path, std::move(pkt), 0);
}

Link::Link(Engine& eng, std::int64_t rate_bps, SimTime prop_delay, std::size_t queue_capacity)
    : eng_(eng), rate_bps_(rate_bps), prop_delay_(prop_delay), capacity_(queue_capacity) {}

Enqueue Link::enqueue(const Path& path, Packet&& pkt, std::size_t hop) {
    SimTime now = eng_.now();
    if (on_arrival) on_arrival(pkt, now);

    if (!in_service_ && queue_.empty()) {
        ++stats_.accepted;
        start_service(Transit{std::move(pkt), &path, hop, next_accept_index_++, now.ticks});
        return Enqueue::accepted;
    }
    if (queue_.size() < capacity_) {
        ++stats_.accepted;
        queue_.push_back(Transit{std::move(pkt), &path, hop, next_accept_index_++, now.ticks});
        stats_.max_occupancy = std::max(stats_.max_occupancy, queue_.size());
        return Enqueue::accepted;
    }
    ++stats_.dropped;
    if (queue_.size() == capacity_) ++stats_.drops_at_full;
    if (path.on_drop) path.on_drop(pkt, now);
    return Enqueue::dropped;
}

void Link::start_service(Transit&& t) {
    std::int64_t now = eng_.now().ticks;
    std::int64_t waited_from = std::max(last_service_end_, t.enqueue_t);
    stats_.idle_nonempty_ticks += now - waited_from;
    std::int64_t ser = serialization_ns(t.pkt.wire_bytes);
    in_service_ = std::move(t);
    eng_.schedule_in(SimTime{ser}, [this] { on_tx_complete(); });
}

void Link::on_tx_complete() {
    last_service_end_ = eng_.now().ticks;
    propagating_.push_back(std::move(*in_service_));
    in_service_.reset();
    eng_.schedule_in(prop_delay_, [this] { on_propagation_end(); });
    if (!queue_.empty()) {
        Transit next = std::move(queue_.front());
        queue_.pop_front();
        start_service(std::move(next));
    }
}

void Link::on_propagation_end() {
    Transit t = std::move(propagating_.front());
    propagating_.pop_front();

    if (t.accept_index != stats_.delivered) ++stats_.fifo_violations;
    ++stats_.delivered;
    stats_.wire_bits_delivered += t.pkt.wire_bytes * 8;

    std::size_t next_hop = t.hop + 1;
    if (next_hop < t.path->links.size()) {
        t.path->links[next_hop]->enqueue(*t.path, std::move(t.pkt), next_hop);
    } else {
        t.pkt.t_received = eng_.now();
        t.path->deliver(std::move(t.pkt), eng_.now());
    }
}

void Link::for_each_in_flight(const std::function<void(const Packet&)>& fn) const {
    if (in_service_) fn(in_service_->pkt);
    for (const auto& t : queue_) fn(t.pkt);
    for (const auto& t : propagating_) fn(t.pkt);
}

Dumbbell::Dumbbell(Engine& eng, const DumbbellConfig& cfg) {
    auto make_access = [&]() -> Link* {
        return &links_.emplace_back(eng, cfg.access_rate_bps, cfg.access_prop,
                                    cfg.queue_capacity);
    };
    bottleneck_ = &links_.emplace_back(eng, cfg.bottleneck_rate_bps, cfg.bottleneck_prop,
                                       cfg.queue_capacity);
    bottleneck_rev_ = &links_.emplace_back(eng, cfg.bottleneck_rate_bps, cfg.bottleneck_prop,
                                           cfg.queue_capacity);

    auto wire = [&](std::vector<Path>& fwd, std::vector<Path>& rev, int n) {
        fwd.resize(static_cast<std::size_t>(n));
        rev.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Link* in = make_access();
            Link* out = make_access();
            Link* rin = make_access();
            Link* rout = make_access();
            fwd[static_cast<std::size_t>(i)].links = {in, bottleneck_, out};
            rev[static_cast<std::size_t>(i)].links = {rin, bottleneck_rev_, rout};
        }
    };
    wire(video_fwd_, video_rev_, cfg.n_video);
    wire(ftp_fwd_, ftp_rev_, cfg.n_ftp);
}

void Dumbbell::for_each_in_flight(const std::function<void(const Packet&)>& fn) const {
    for (const auto& l : links_) l.for_each_in_flight(fn);
}

Link::Stats Dumbbell::aggregate_stats() const {
    Link::Stats agg;
    for (const auto& l : links_) {
        const auto& s = l.stats();
        agg.accepted += s.accepted;
        agg.dropped += s.dropped;
        agg.delivered += s.delivered;
        agg.wire_bits_delivered += s.wire_bits_delivered;
        agg.max_occupancy = std::max(agg.max_occupancy, s.max_occupancy);
        agg.drops_at_full += s.drops_at_full;
        agg.fifo_violations += s.fifo_violations;
        agg.idle_nonempty_ticks += s.idle_nonempty_ticks;
    }
    return agg;
}

} // namespace vqsim
