#include "scenario.hpp"

#include "background_traffic.hpp"

#include <algorithm>
#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace vqsim {

const char* version_string() { return "1.0.0"; }

const char* architecture_name(Architecture a) {
    switch (a) {
    case Architecture::non_adaptive: return "non_adaptive";
    case Architecture::adaptive: return "adaptive";
    case Architecture::cross: return "cross";
    }
    return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t kArrivalTag = 0x61727276ULL; // arrival stream
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;   // frame-size noise streams

// ---- value formatting and parsing ------------------------------------

// Shortest decimal spelling that parses back to the same double, so the
// canonical config and the CSVs are byte-stable across runs.
std::string format_double(double v) {
    char buf[48];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::int64_t parse_i64(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw config_error("not an integer: '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    std::int64_t v = parse_i64(s);
    if (v < INT_MIN || v > INT_MAX) throw config_error("out of int range: '" + s + "'");
    return static_cast<int>(v);
}

double parse_f64(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw config_error("not a number: '" + s + "'");
    if (!std::isfinite(v)) throw config_error("not finite: '" + s + "'");
    return v;
}

Architecture parse_architecture(const std::string& s) {
    if (s == "non_adaptive") return Architecture::non_adaptive;
    if (s == "adaptive") return Architecture::adaptive;
    if (s == "cross") return Architecture::cross;
    throw config_error("expected non_adaptive|adaptive|cross, got '" + s + "'");
}

const char* gate_choice_name(GateChoice g) {
    switch (g) {
    case GateChoice::auto_pick: return "auto";
    case GateChoice::always_admit: return "always_admit";
    case GateChoice::bandwidth_check: return "bandwidth_check";
    case GateChoice::qoe_aware: return "qoe_aware";
    }
    return "?";
}

GateChoice parse_gate_choice(const std::string& s) {
    if (s == "auto") return GateChoice::auto_pick;
    if (s == "always_admit") return GateChoice::always_admit;
    if (s == "bandwidth_check") return GateChoice::bandwidth_check;
    if (s == "qoe_aware") return GateChoice::qoe_aware;
    throw config_error("expected auto|always_admit|bandwidth_check|qoe_aware, got '" + s + "'");
}

const char* adaptation_mode_name(AdaptationMode m) {
    switch (m) {
    case AdaptationMode::auto_pick: return "auto";
    case AdaptationMode::on: return "on";
    case AdaptationMode::off: return "off";
    }
    return "?";
}

AdaptationMode parse_adaptation_mode(const std::string& s) {
    if (s == "auto") return AdaptationMode::auto_pick;
    if (s == "on") return AdaptationMode::on;
    if (s == "off") return AdaptationMode::off;
    throw config_error("expected auto|on|off, got '" + s + "'");
}

const char* controller_name(RateController c) {
    return c == RateController::tfrc ? "tfrc" : "aimd";
}

RateController parse_controller(const std::string& s) {
    if (s == "tfrc") return RateController::tfrc;
    if (s == "aimd") return RateController::aimd;
    throw config_error("expected tfrc|aimd, got '" + s + "'");
}

const char* estimator_name(JitterEstimator e) {
    return e == JitterEstimator::mean_abs ? "mean_abs" : "rtp_smoothed";
}

JitterEstimator parse_estimator(const std::string& s) {
    if (s == "mean_abs") return JitterEstimator::mean_abs;
    if (s == "rtp_smoothed") return JitterEstimator::rtp_smoothed;
    throw config_error("expected mean_abs|rtp_smoothed, got '" + s + "'");
}

const char* arrival_kind_name(ArrivalKind k) {
    return k == ArrivalKind::per_slot ? "per_slot" : "poisson";
}

ArrivalKind parse_arrival_kind(const std::string& s) {
    if (s == "per_slot") return ArrivalKind::per_slot;
    if (s == "poisson") return ArrivalKind::poisson;
    throw config_error("expected per_slot|poisson, got '" + s + "'");
}

// ---- config key table -------------------------------------------------

struct KeyDef {
    const char* key;
    std::string (*get)(const ScenarioConfig&);
    void (*set)(ScenarioConfig&, const std::string&);
};

#define CFG_KEY(name, getter, setter)                                  \
    {name, [](const ScenarioConfig& c) -> std::string { return getter; }, \
     [](ScenarioConfig& c, const std::string& v) { setter; }}

const KeyDef kKeys[] = {
    CFG_KEY("architecture", architecture_name(c.architecture),
            c.architecture = parse_architecture(v)),
    CFG_KEY("sim.horizon_s", format_double(c.horizon_s), c.horizon_s = parse_f64(v)),
    CFG_KEY("sim.seed", std::to_string(c.seed), c.seed = parse_i64(v)),
    CFG_KEY("network.capacity_bps", std::to_string(c.capacity_bps),
            c.capacity_bps = parse_i64(v)),
    CFG_KEY("network.queue_capacity_packets", std::to_string(c.queue_capacity),
            c.queue_capacity = parse_int(v)),
    CFG_KEY("network.bottleneck_prop_delay_ms", format_double(c.bottleneck_prop_delay_ms),
            c.bottleneck_prop_delay_ms = parse_f64(v)),
    CFG_KEY("network.access_rate_bps", std::to_string(c.access_rate_bps),
            c.access_rate_bps = parse_i64(v)),
    CFG_KEY("network.access_prop_delay_ms", format_double(c.access_prop_delay_ms),
            c.access_prop_delay_ms = parse_f64(v)),
    CFG_KEY("sources.n_video", std::to_string(c.n_video), c.n_video = parse_int(v)),
    CFG_KEY("sources.n_ftp", std::to_string(c.n_ftp), c.n_ftp = parse_int(v)),
    CFG_KEY("content.frames", std::to_string(c.content.frames),
            c.content.frames = parse_int(v)),
    CFG_KEY("content.fps", std::to_string(c.content.fps), c.content.fps = parse_int(v)),
    CFG_KEY("content.gop", std::to_string(c.content.gop), c.content.gop = parse_int(v)),
    CFG_KEY("content.i_frame_bytes", std::to_string(c.content.i_frame_bytes),
            c.content.i_frame_bytes = parse_i64(v)),
    CFG_KEY("content.p_frame_bytes", std::to_string(c.content.p_frame_bytes),
            c.content.p_frame_bytes = parse_i64(v)),
    CFG_KEY("content.alpha", format_double(c.content.alpha), c.content.alpha = parse_f64(v)),
    CFG_KEY("content.sigma", format_double(c.content.sigma), c.content.sigma = parse_f64(v)),
    CFG_KEY("content.max_payload_bytes", std::to_string(c.content.max_payload_bytes),
            c.content.max_payload_bytes = parse_i64(v)),
    CFG_KEY("mos.r1_bps", format_double(c.mos_curve.r1_bps), c.mos_curve.r1_bps = parse_f64(v)),
    CFG_KEY("mos.r5_bps", format_double(c.mos_curve.r5_bps), c.mos_curve.r5_bps = parse_f64(v)),
    CFG_KEY("admission.gate", gate_choice_name(c.admission_gate),
            c.admission_gate = parse_gate_choice(v)),
    CFG_KEY("admission.beta", format_double(c.admission_beta),
            c.admission_beta = parse_f64(v)),
    CFG_KEY("admission.theta", format_double(c.admission_theta),
            c.admission_theta = parse_f64(v)),
    CFG_KEY("admission.max_sessions", std::to_string(c.max_sessions),
            c.max_sessions = parse_int(v)),
    CFG_KEY("admission.window_s", format_double(c.admission_window_s),
            c.admission_window_s = parse_f64(v)),
    CFG_KEY("adaptation.mode", adaptation_mode_name(c.adaptation_mode),
            c.adaptation_mode = parse_adaptation_mode(v)),
    CFG_KEY("adaptation.controller", controller_name(c.controller),
            c.controller = parse_controller(v)),
    CFG_KEY("adaptation.report_interval_s", format_double(c.report_interval_s),
            c.report_interval_s = parse_f64(v)),
    CFG_KEY("metrics.success_threshold", format_double(c.success_threshold),
            c.success_threshold = parse_f64(v)),
    CFG_KEY("metrics.jitter_estimator", estimator_name(c.jitter_estimator),
            c.jitter_estimator = parse_estimator(v)),
    CFG_KEY("arrivals.process", arrival_kind_name(c.arrival_process),
            c.arrival_process = parse_arrival_kind(v)),
    CFG_KEY("arrivals.poisson_rate_per_s", format_double(c.poisson_rate_per_s),
            c.poisson_rate_per_s = parse_f64(v)),
};

#undef CFG_KEY

const KeyDef* find_key(const std::string& key) {
    for (const auto& k : kKeys)
        if (key == k.key) return &k;
    return nullptr;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const KeyDef* def = find_key(key);
    if (!def) throw config_error("unknown key '" + key + "'");
    try {
        def->set(cfg, value);
    } catch (const config_error& e) {
        throw config_error(key + ": " + e.what());
    }
}

std::string get_key(const ScenarioConfig& cfg, const std::string& key) {
    const KeyDef* def = find_key(key);
    if (!def) throw config_error("unknown key '" + key + "'");
    return def->get(cfg);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : kKeys) out.emplace_back(k.key);
    return out;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
        try {
            set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const config_error& e) {
            throw config_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    ScenarioConfig cfg = parse_config(buf.str(), path);
    validate(cfg);
    return cfg;
}

std::string save_config(const ScenarioConfig& cfg) {
    std::string out;
    for (const auto& k : kKeys) {
        out += k.key;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

void save_config_file(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << save_config(cfg);
}

void validate(const ScenarioConfig& c) {
    std::vector<std::string> bad;
    auto req = [&](bool ok, const char* msg) {
        if (!ok) bad.emplace_back(msg);
    };
    req(c.horizon_s > 0, "sim.horizon_s must be positive");
    req(c.capacity_bps > 0, "network.capacity_bps must be positive");
    req(c.queue_capacity >= 1, "network.queue_capacity_packets must be at least 1");
    req(c.bottleneck_prop_delay_ms >= 0, "network.bottleneck_prop_delay_ms must be >= 0");
    req(c.access_rate_bps > 0, "network.access_rate_bps must be positive");
    req(c.access_prop_delay_ms >= 0, "network.access_prop_delay_ms must be >= 0");
    req(c.n_video >= 0, "sources.n_video must be >= 0");
    req(c.n_ftp >= 0, "sources.n_ftp must be >= 0");
    req(c.content.frames >= 1, "content.frames must be at least 1");
    req(c.content.fps >= 1, "content.fps must be at least 1");
    req(c.content.gop >= 1, "content.gop must be at least 1");
    req(c.content.i_frame_bytes >= 1, "content.i_frame_bytes must be at least 1");
    req(c.content.p_frame_bytes >= 1, "content.p_frame_bytes must be at least 1");
    req(c.content.alpha > 0, "content.alpha must be positive");
    req(c.content.sigma >= 0, "content.sigma must be >= 0");
    req(c.content.max_payload_bytes >= 1, "content.max_payload_bytes must be at least 1");
    req(c.mos_curve.r1_bps > 0, "mos.r1_bps must be positive");
    req(c.mos_curve.r5_bps > c.mos_curve.r1_bps, "mos.r5_bps must exceed mos.r1_bps");
    req(c.admission_beta > 0 && c.admission_beta <= 1,
        "admission.beta must be in (0, 1]");
    req(c.admission_theta >= 1 && c.admission_theta <= 5,
        "admission.theta must be in [1, 5]");
    req(c.max_sessions >= 0, "admission.max_sessions must be >= 0");
    req(c.admission_window_s > 0, "admission.window_s must be positive");
    req(c.report_interval_s > 0, "adaptation.report_interval_s must be positive");
    req(c.success_threshold >= 0 && c.success_threshold <= 1,
        "metrics.success_threshold must be in [0, 1]");
    req(c.poisson_rate_per_s > 0, "arrivals.poisson_rate_per_s must be positive");
    if (!bad.empty()) {
        std::string msg = "invalid config: " + bad.front();
        for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
        throw config_error(msg);
    }
}

AdmissionGate effective_gate(const ScenarioConfig& c) {
    switch (c.admission_gate) {
    case GateChoice::always_admit: return AdmissionGate::always_admit;
    case GateChoice::bandwidth_check: return AdmissionGate::bandwidth_check;
    case GateChoice::qoe_aware: return AdmissionGate::qoe_aware;
    case GateChoice::auto_pick: break;
    }
    // Only the cross arm gates admissions. The other two arms take every
    // request: a bandwidth gate would cap their load near capacity and
    // erase the overload regime the three-way comparison is about
    // (bandwidth_check remains available as an explicit choice).
    return c.architecture == Architecture::cross ? AdmissionGate::qoe_aware
                                                 : AdmissionGate::always_admit;
}

bool adaptation_enabled(const ScenarioConfig& c) {
    switch (c.adaptation_mode) {
    case AdaptationMode::on: return true;
    case AdaptationMode::off: return false;
    case AdaptationMode::auto_pick: break;
    }
    return c.architecture != Architecture::non_adaptive;
}

std::vector<SimTime> arrival_times(const ScenarioConfig& c) {
    std::vector<SimTime> out;
    std::mt19937_64 rng(splitmix64(static_cast<std::uint64_t>(c.seed) ^ kArrivalTag));
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const std::int64_t horizon_ns = SimTime::seconds(c.horizon_s).ticks;
    if (c.arrival_process == ArrivalKind::per_slot) {
        for (int k = 0; k < c.n_video; ++k) {
            std::int64_t offset = static_cast<std::int64_t>(uniform() * 1e9);
            std::int64_t t = k * 1'000'000'000LL + offset;
            if (t < horizon_ns) out.push_back(SimTime{t});
        }
    } else {
        double t_s = 0.0;
        while (out.size() < static_cast<std::size_t>(c.n_video)) {
            t_s += -std::log(1.0 - uniform()) / c.poisson_rate_per_s;
            SimTime t = SimTime::seconds(t_s);
            if (t.ticks >= horizon_ns) break;
            out.push_back(t);
        }
    }
    return out;
}

std::uint64_t session_noise_seed(std::int64_t run_seed, int session_id) {
    return splitmix64(splitmix64(static_cast<std::uint64_t>(run_seed) ^ kNoiseTag) +
                      static_cast<std::uint64_t>(session_id));
}

namespace {

// ---- packet log -------------------------------------------------------

struct PacketLogger {
    std::ofstream out;
    bool enabled = false;

    void open(const fs::path& p) {
        out.open(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
        out << "event,time_ns,session_id,flow_kind,seq,frame_index,wire_bytes\n";
        enabled = true;
    }

    void log(const char* event, std::int64_t t, int session, FlowKind kind, std::int64_t seq,
             std::int64_t frame_index, std::int64_t wire) {
        if (!enabled) return;
        out << event << ',' << t << ',' << session << ',' << flow_kind_name(kind) << ','
            << seq << ',' << frame_index << ',' << wire << '\n';
    }
};

// ---- one video session (sender + receiver endpoints) -------------------

class VideoSession {
public:
    VideoSession(Engine& eng, const ScenarioConfig& cfg, int id, Path& fwd, Path& rev,
                 SessionRecord& rec, std::uint64_t* packet_ids, int start_q, bool adaptive,
                 std::vector<AdaptationLogRow>* adapt_log, PacketLogger* plog)
        : eng_(eng),
          cfg_(cfg),
          id_(id),
          fwd_(fwd),
          rev_(rev),
          rec_(rec),
          packet_ids_(packet_ids),
          fixed_q_(start_q),
          adaptive_(adaptive),
          adapt_log_(adapt_log),
          plog_(plog),
          noise_(size_noise(cfg.content, session_noise_seed(cfg.seed, id))),
          rx_(id) {
        if (adaptive_) {
            std::int64_t one_way = 2 * SimTime::millis(cfg.access_prop_delay_ms).ticks +
                                   SimTime::millis(cfg.bottleneck_prop_delay_ms).ticks;
            adapt_.emplace(cfg_.content, start_q, 2 * one_way, cfg.controller,
                           cfg.content.max_payload_bytes + kPacketHeaderBytes);
        }
        fwd_.deliver = [this](Packet&& p, SimTime t) { on_video_packet(p, t); };
        fwd_.on_drop = [this](const Packet& p, SimTime t) { on_video_drop(p, t); };
        rev_.deliver = [this](Packet&& p, SimTime t) { on_report_packet(p, t); };
        rev_.on_drop = [this](const Packet& p, SimTime t) { on_report_drop(p, t); };
    }

    void start(SimTime when) {
        eng_.schedule_at(when, [this] { emit_frame(); });
        if (adaptive_) {
            eng_.schedule_at(when + report_interval(), [this] { report_tick(); });
        }
    }

    int current_q() const { return adapt_ ? adapt_->current_q() : fixed_q_; }
    std::int64_t reports_sent() const { return reports_sent_; }
    std::int64_t reports_received() const { return reports_received_; }
    std::int64_t reports_dropped() const { return reports_dropped_; }

private:
    SimTime report_interval() const { return SimTime::seconds(cfg_.report_interval_s); }

    void emit_frame() {
        const SimTime now = eng_.now();
        const std::int64_t g = next_frame_++;
        const int pass_pos = static_cast<int>(g % cfg_.content.frames);
        const FrameType type = frame_type_at(cfg_.content, pass_pos);
        if (adapt_ && pass_pos % cfg_.content.gop == 0) adapt_->apply_pending();
        const int q = adapt_ ? adapt_->current_q() : fixed_q_;
        const std::int64_t size =
            frame_size_bytes(cfg_.content, q, type, noise_[static_cast<std::size_t>(pass_pos)]);
        const auto chunks = packetize(size, cfg_.content.max_payload_bytes);

        FrameRecord fr;
        fr.global_index = g;
        fr.type = type;
        fr.size_bytes = size;
        fr.packets_expected = static_cast<std::int32_t>(chunks.size());
        fr.emit_ticks = now.ticks;
        rec_.frames.push_back(fr);

        for (const auto& chunk : chunks) {
            Packet pkt;
            pkt.id = (*packet_ids_)++;
            pkt.session_id = id_;
            pkt.flow_kind = FlowKind::video;
            pkt.wire_bytes = chunk.wire_bytes;
            pkt.payload_bytes = chunk.payload_bytes;
            pkt.seq = ++last_seq_;
            pkt.frame_index = g;
            pkt.frame_type = type;
            pkt.t_sent = now;
            ++rec_.sent;
            plog_->log("send", now.ticks, id_, FlowKind::video, pkt.seq, g, pkt.wire_bytes);
            send(fwd_, std::move(pkt));
        }
        eng_.schedule_at(now + SimTime::nanos(frame_interval_ns(cfg_.content.fps)),
                         [this] { emit_frame(); });
    }

    void on_video_packet(const Packet& pkt, SimTime now) {
        rec_.on_received_packet(pkt.t_sent.ticks, now.ticks);
        rec_.received_wire_bytes += pkt.wire_bytes;
        auto idx = static_cast<std::size_t>(pkt.frame_index);
        if (idx < rec_.frames.size()) ++rec_.frames[idx].packets_received;
        if (adaptive_) rx_.on_packet(pkt.seq, pkt.t_sent.ticks, now.ticks, pkt.wire_bytes);
        plog_->log("recv", now.ticks, id_, FlowKind::video, pkt.seq, pkt.frame_index,
                   pkt.wire_bytes);
    }

    void on_video_drop(const Packet& pkt, SimTime now) {
        ++rec_.dropped;
        plog_->log("drop", now.ticks, id_, FlowKind::video, pkt.seq, pkt.frame_index,
                   pkt.wire_bytes);
    }

    void report_tick() {
        const SimTime now = eng_.now();
        auto rep = rx_.make_report(now.ticks, cfg_.report_interval_s);
        if (rep) {
            const std::int64_t rseq = ++reports_sent_;
            in_transit_.emplace(rseq, *rep);
            Packet pkt;
            pkt.id = (*packet_ids_)++;
            pkt.session_id = id_;
            pkt.flow_kind = FlowKind::report;
            pkt.wire_bytes = kFeedbackWireBytes;
            pkt.payload_bytes = kFeedbackWireBytes - kPacketHeaderBytes;
            pkt.seq = rseq;
            pkt.t_sent = now;
            plog_->log("send", now.ticks, id_, FlowKind::report, rseq, -1, pkt.wire_bytes);
            send(rev_, std::move(pkt));
        }
        eng_.schedule_at(now + report_interval(), [this] { report_tick(); });
    }

    void on_report_packet(const Packet& pkt, SimTime now) {
        ++reports_received_;
        plog_->log("recv", now.ticks, id_, FlowKind::report, pkt.seq, -1, pkt.wire_bytes);
        if (!adapt_) return;
        auto it = in_transit_.find(pkt.seq);
        if (it == in_transit_.end()) return;
        ReceiverReport rep = it->second;
        in_transit_.erase(it);
        rep.rtt_sample_ns = std::max<std::int64_t>(
            now.ticks - rep.echo_t_sent_ns - rep.echo_hold_ns, 1);
        if (adapt_->on_report(rep) && adapt_log_) {
            adapt_log_->push_back({now.ticks, id_, adapt_->loss_event_rate(),
                                   std::llround(adapt_->smoothed_rtt_s() * 1e9),
                                   adapt_->allowed_rate_bps(), adapt_->pending_q()});
        }
    }

    void on_report_drop(const Packet& pkt, SimTime now) {
        ++reports_dropped_;
        in_transit_.erase(pkt.seq);
        plog_->log("drop", now.ticks, id_, FlowKind::report, pkt.seq, -1, pkt.wire_bytes);
    }

    Engine& eng_;
    const ScenarioConfig& cfg_;
    int id_;
    Path& fwd_;
    Path& rev_;
    SessionRecord& rec_;
    std::uint64_t* packet_ids_;
    int fixed_q_;
    bool adaptive_;
    std::vector<AdaptationLogRow>* adapt_log_;
    PacketLogger* plog_;
    std::vector<double> noise_;
    ReceiverState rx_;
    std::optional<AdaptationState> adapt_;

    std::int64_t next_frame_ = 0;
    std::int64_t last_seq_ = 0;
    std::int64_t reports_sent_ = 0;
    std::int64_t reports_received_ = 0;
    std::int64_t reports_dropped_ = 0;
    std::map<std::int64_t, ReceiverReport> in_transit_;
};

// ---- output writers ----------------------------------------------------

std::ofstream open_or_throw(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
    return f;
}

void write_cdf(const fs::path& p, const std::vector<double>& values) {
    auto f = open_or_throw(p);
    f << "value,cum_fraction\n";
    for (const auto& [v, frac] : cdf(values)) {
        f << format_double(v) << ',' << format_double(frac) << '\n';
    }
}

void write_run_outputs(const fs::path& dir, const ScenarioConfig& cfg, const RunResult& res) {
    fs::create_directories(dir);

    {
        auto f = open_or_throw(dir / "sessions.csv");
        f << "session_id,architecture,admitted,successful,mean_mos,mean_delay_ns,"
             "mean_jitter_ns,drop_ratio,sent,received,dropped,decodable_ratio\n";
        for (std::size_t i = 0; i < res.sessions.size(); ++i) {
            const auto& rec = res.sessions[i];
            const auto& m = res.metrics[i];
            f << rec.session_id << ',' << architecture_name(res.architecture) << ','
              << (rec.admitted ? 1 : 0) << ',' << (m.successful ? 1 : 0) << ','
              << format_double(m.mean_mos) << ',' << format_double(m.mean_delay_ns) << ','
              << format_double(m.mean_jitter_ns) << ',' << format_double(m.drop_ratio) << ','
              << rec.sent << ',' << rec.received << ',' << rec.dropped << ','
              << format_double(m.decodable_ratio) << '\n';
        }
    }

    {
        auto f = open_or_throw(dir / "summary.csv");
        f << "architecture,seed,mean_mos,successful_sessions,mean_delay_ns,mean_jitter_ns,"
             "drop_ratio,utilization,utilization_video_raw,utilization_total,requested,"
             "admitted,rejected,sent,received,dropped,in_flight,events\n";
        f << architecture_name(res.architecture) << ',' << res.seed << ','
          << format_double(res.mean_mos) << ',' << res.successful_sessions << ','
          << format_double(res.mean_delay_ns) << ',' << format_double(res.mean_jitter_ns)
          << ',' << format_double(res.drop_ratio) << ',' << format_double(res.utilization)
          << ',' << format_double(res.utilization_video_raw) << ','
          << format_double(res.utilization_total) << ',' << res.requested << ','
          << res.admitted << ',' << res.rejected << ',' << res.conservation.sent << ','
          << res.conservation.received << ',' << res.conservation.dropped << ','
          << res.conservation.in_flight << ',' << res.events_processed << '\n';
    }

    std::vector<double> mos, delay, jitter, drops;
    for (std::size_t i = 0; i < res.sessions.size(); ++i) {
        if (!res.sessions[i].admitted) continue;
        mos.push_back(res.metrics[i].mean_mos);
        delay.push_back(res.metrics[i].mean_delay_ns);
        jitter.push_back(res.metrics[i].mean_jitter_ns);
        drops.push_back(res.metrics[i].drop_ratio);
    }
    write_cdf(dir / "cdf_mos.csv", mos);
    write_cdf(dir / "cdf_delay.csv", delay);
    write_cdf(dir / "cdf_jitter.csv", jitter);
    write_cdf(dir / "cdf_drop_ratio.csv", drops);

    {
        auto f = open_or_throw(dir / "admission.csv");
        f << "time_ns,session_id,policy,decision,reason,measured_bps,residual_bps,"
             "recommended_q\n";
        for (const auto& row : res.admission_log) {
            const char* policy = row.policy == AdmissionGate::qoe_aware ? "qoe_aware"
                                 : row.policy == AdmissionGate::bandwidth_check
                                     ? "bandwidth_check"
                                     : "always_admit";
            f << row.time_ns << ',' << row.session_id << ',' << policy << ','
              << (row.admitted ? "admit" : "reject") << ',' << reject_reason_name(row.reason)
              << ',' << format_double(row.measured_bps) << ','
              << format_double(row.residual_bps) << ',' << row.recommended_q << '\n';
        }
    }

    {
        auto f = open_or_throw(dir / "adaptation.csv");
        f << "time_ns,session_id,p,rtt_ns,allowed_bps,q\n";
        for (const auto& row : res.adaptation_log) {
            f << row.time_ns << ',' << row.session_id << ',' << format_double(row.p) << ','
              << row.rtt_ns << ',' << format_double(row.allowed_bps) << ',' << row.q << '\n';
        }
    }

    {
        // Annotations ride as comments so the file stays a loadable config.
        auto f = open_or_throw(dir / "meta.txt");
        f << "# version = " << version_string() << '\n';
        f << save_config(cfg);
        f << "# effective.admission_gate = "
          << (effective_gate(cfg) == AdmissionGate::qoe_aware         ? "qoe_aware"
              : effective_gate(cfg) == AdmissionGate::bandwidth_check ? "bandwidth_check"
                                                                      : "always_admit")
          << '\n';
        f << "# effective.adaptation = " << (adaptation_enabled(cfg) ? "on" : "off") << '\n';
        f << "# derived.nominal_rate_q2_bps = "
          << format_double(nominal_rate_bps(cfg.content, kQuantMin)) << '\n';
        f << "# derived.nominal_rate_q31_bps = "
          << format_double(nominal_rate_bps(cfg.content, kQuantMax)) << '\n';
        f << "# derived.frame_interval_ns = " << frame_interval_ns(cfg.content.fps) << '\n';
    }
}

// Wraps a path's callbacks (bound by its flow) with packet-log taps, and
// logs sends at the path's entry link.
void tap_path_for_log(Path& path, PacketLogger& plog) {
    path.links.front()->on_arrival = [&plog](const Packet& pkt, SimTime t) {
        plog.log("send", t.ticks, pkt.session_id, pkt.flow_kind, pkt.seq, pkt.frame_index,
                 pkt.wire_bytes);
    };
    auto inner_deliver = std::move(path.deliver);
    path.deliver = [&plog, inner_deliver](Packet&& pkt, SimTime t) {
        plog.log("recv", t.ticks, pkt.session_id, pkt.flow_kind, pkt.seq, pkt.frame_index,
                 pkt.wire_bytes);
        inner_deliver(std::move(pkt), t);
    };
    auto inner_drop = std::move(path.on_drop);
    path.on_drop = [&plog, inner_drop](const Packet& pkt, SimTime t) {
        plog.log("drop", t.ticks, pkt.session_id, pkt.flow_kind, pkt.seq, pkt.frame_index,
                 pkt.wire_bytes);
        inner_drop(pkt, t);
    };
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

RunResult run(const ScenarioConfig& cfg, const std::string& out_dir, bool packet_log,
              bool keep_raw) {
    validate(cfg);

    Engine eng;
    DumbbellConfig dcfg;
    dcfg.n_video = cfg.n_video;
    dcfg.n_ftp = cfg.n_ftp;
    dcfg.bottleneck_rate_bps = cfg.capacity_bps;
    dcfg.bottleneck_prop = SimTime::millis(cfg.bottleneck_prop_delay_ms);
    dcfg.access_rate_bps = cfg.access_rate_bps;
    dcfg.access_prop = SimTime::millis(cfg.access_prop_delay_ms);
    dcfg.queue_capacity = static_cast<std::size_t>(cfg.queue_capacity);
    Dumbbell net(eng, dcfg);

    LinkMonitor monitor(SimTime::seconds(cfg.admission_window_s).ticks);
    net.bottleneck().on_arrival = [&monitor](const Packet& pkt, SimTime t) {
        if (pkt.flow_kind == FlowKind::video) monitor.observe(t.ticks, pkt.wire_bytes);
    };

    RunResult res;
    res.architecture = cfg.architecture;
    res.seed = cfg.seed;

    PacketLogger plog;
    if (packet_log && !out_dir.empty()) {
        fs::create_directories(out_dir);
        plog.open(fs::path(out_dir) / "packets.csv");
    }

    const SimTime horizon = SimTime::seconds(cfg.horizon_s);
    const auto arrivals = arrival_times(cfg);
    res.sessions.resize(arrivals.size());

    AdmissionPolicy policy;
    policy.gate = effective_gate(cfg);
    policy.capacity_bps = static_cast<double>(cfg.capacity_bps);
    policy.beta = cfg.admission_beta;
    policy.theta = cfg.admission_theta;
    policy.max_sessions = cfg.max_sessions;
    const bool adaptive = adaptation_enabled(cfg);

    std::uint64_t packet_ids = 0;
    std::vector<std::unique_ptr<VideoSession>> vsessions(arrivals.size());
    int active = 0;

    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        const int sid = static_cast<int>(i);
        eng.schedule_at(arrivals[i], [&, sid] {
            const SimTime now = eng.now();
            SessionRecord& rec = res.sessions[static_cast<std::size_t>(sid)];
            rec.session_id = sid;
            rec.t_start = now;
            rec.t_end = horizon;
            ++res.requested;

            const double measured = monitor.rate_bps(now.ticks);
            const AdmissionDecision d =
                decide(policy, measured, active, cfg.content, cfg.mos_curve);
            res.admission_log.push_back({now.ticks, sid, policy.gate, d.admit, d.reason,
                                         measured, d.residual_bps, d.recommended_q});
            if (policy.gate == AdmissionGate::qoe_aware && d.admit &&
                d.predicted_mos < policy.theta)
                ++res.qoe_gate_violations;
            if (!d.admit) {
                ++res.rejected;
                return;
            }
            ++res.admitted;
            ++active;
            if (policy.gate != AdmissionGate::always_admit && active > policy.max_sessions)
                ++res.admissions_over_cap;
            rec.admitted = true;

            const int start_q =
                policy.gate == AdmissionGate::qoe_aware ? d.recommended_q : kQuantMin;
            // VideoSession writes its own packet-log rows; only the FTP
            // paths need external taps.
            auto& slot = vsessions[static_cast<std::size_t>(sid)];
            slot = std::make_unique<VideoSession>(
                eng, cfg, sid, net.video_fwd(sid), net.video_rev(sid), rec, &packet_ids,
                start_q, adaptive, adaptive ? &res.adaptation_log : nullptr, &plog);
            slot->start(now);
        });
    }

    std::vector<std::unique_ptr<FtpFlow>> flows;
    flows.reserve(static_cast<std::size_t>(cfg.n_ftp));
    for (int j = 0; j < cfg.n_ftp; ++j) {
        flows.push_back(std::make_unique<FtpFlow>(eng, 1000 + j, net.ftp_fwd(j),
                                                  net.ftp_rev(j), &packet_ids));
        if (plog.enabled) {
            tap_path_for_log(net.ftp_fwd(j), plog);
            tap_path_for_log(net.ftp_rev(j), plog);
        }
        flows.back()->start(SimTime::seconds(0.1 * j));
    }

    res.events_processed = eng.run_until(horizon);

    // Conservation: every packet presented to the network is delivered,
    // dropped, or still inside a link at the horizon.
    std::int64_t inflight_all = 0, inflight_video = 0;
    net.for_each_in_flight([&](const Packet& pkt) {
        ++inflight_all;
        if (pkt.flow_kind == FlowKind::video) ++inflight_video;
    });
    for (const auto& rec : res.sessions) {
        res.video_conservation.sent += rec.sent;
        res.video_conservation.received += rec.received;
        res.video_conservation.dropped += rec.dropped;
    }
    res.video_conservation.in_flight = inflight_video;
    res.conservation = res.video_conservation;
    res.conservation.in_flight = inflight_all;
    for (const auto& vs : vsessions) {
        if (!vs) continue;
        res.conservation.sent += vs->reports_sent();
        res.conservation.received += vs->reports_received();
        res.conservation.dropped += vs->reports_dropped();
    }
    for (const auto& fl : flows) {
        res.conservation.sent +=
            static_cast<std::int64_t>(fl->segments_sent() + fl->acks_sent());
        res.conservation.received +=
            static_cast<std::int64_t>(fl->segments_delivered() + fl->acks_received());
        res.conservation.dropped +=
            static_cast<std::int64_t>(fl->segments_dropped() + fl->acks_dropped());
    }

    res.metrics.resize(res.sessions.size());
    double mos_sum = 0, delay_sum = 0, jitter_sum = 0, drop_sum = 0;
    std::int64_t decodable_bits = 0, video_recv_bits = 0;
    for (std::size_t i = 0; i < res.sessions.size(); ++i) {
        auto& rec = res.sessions[i];
        res.metrics[i] = finalize_session(rec, cfg.content.gop, cfg.mos_curve,
                                          cfg.content.max_payload_bytes,
                                          cfg.success_threshold, cfg.jitter_estimator);
        std::int64_t abs_sum = 0, pairs = 0;
        recompute_jitter(rec.recv_log, abs_sum, pairs);
        if (abs_sum != rec.jitter_abs_sum_ns || pairs != rec.jitter_pairs)
            res.jitter_oracle_match = false;
        if (rec.admitted) {
            const auto& m = res.metrics[i];
            mos_sum += m.mean_mos;
            delay_sum += m.mean_delay_ns;
            jitter_sum += m.mean_jitter_ns;
            drop_sum += m.drop_ratio;
            if (m.successful) ++res.successful_sessions;
            decodable_bits += m.decodable_wire_bits;
            video_recv_bits += rec.received_wire_bytes * 8;
        }
        if (!keep_raw) {
            rec.recv_log = {};
            rec.frames = {};
        }
    }
    if (res.admitted > 0) {
        res.mean_mos = mos_sum / res.admitted;
        res.mean_delay_ns = delay_sum / res.admitted;
        res.mean_jitter_ns = jitter_sum / res.admitted;
        res.drop_ratio = drop_sum / res.admitted;
    }
    res.utilization =
        utilization(decodable_bits, static_cast<double>(cfg.capacity_bps), cfg.horizon_s);
    res.utilization_video_raw =
        utilization(video_recv_bits, static_cast<double>(cfg.capacity_bps), cfg.horizon_s);
    res.utilization_total = utilization(net.bottleneck().stats().wire_bits_delivered,
                                        static_cast<double>(cfg.capacity_bps), cfg.horizon_s);

    res.bottleneck_stats = net.bottleneck().stats();
    res.aggregate_stats = net.aggregate_stats();
    res.max_bottleneck_occupancy = res.bottleneck_stats.max_occupancy;
    res.drops_not_at_capacity = res.aggregate_stats.dropped - res.aggregate_stats.drops_at_full;
    res.fifo_violations = res.aggregate_stats.fifo_violations;
    res.idle_nonempty_ticks = res.aggregate_stats.idle_nonempty_ticks;

    if (!out_dir.empty()) write_run_outputs(out_dir, cfg, res);
    return res;
}

const RunResult& CompareResult::at(Architecture a, std::size_t seed_index) const {
    return runs[static_cast<std::size_t>(a) * seeds.size() + seed_index];
}

namespace {

struct RefValues {
    double mos;
    int sessions;
};

// Headline results reported by the study this scenario reproduces.
RefValues reference_for(Architecture a) {
    switch (a) {
    case Architecture::non_adaptive: return {1.0, 5};
    case Architecture::adaptive: return {1.8, 15};
    case Architecture::cross: return {2.4, 20};
    }
    return {0.0, 0};
}

constexpr Architecture kAllArchitectures[] = {Architecture::non_adaptive,
                                              Architecture::adaptive, Architecture::cross};

} // namespace

CompareResult compare(const ScenarioConfig& base, const std::vector<std::int64_t>& seeds,
                      const std::string& out_dir, bool packet_log) {
    if (seeds.empty()) throw config_error("compare needs at least one seed");
    validate(base);

    CompareResult cr;
    cr.seeds = seeds;
    cr.runs.reserve(3 * seeds.size());

    for (Architecture arch : kAllArchitectures) {
        for (std::int64_t seed : seeds) {
            ScenarioConfig c = base;
            c.architecture = arch;
            c.seed = seed;
            std::string dir;
            if (!out_dir.empty()) {
                dir = (fs::path(out_dir) / architecture_name(arch) /
                       ("seed_" + std::to_string(seed)))
                          .string();
            }
            cr.runs.push_back(run(c, dir, packet_log));
        }
    }

    if (out_dir.empty()) return cr;
    fs::create_directories(out_dir);

    {
        auto f = open_or_throw(fs::path(out_dir) / "comparison.csv");
        f << "architecture,ref_mos,ref_sessions,mean_mos,sd_mean_mos,successful_sessions,"
             "sd_successful_sessions,mean_delay_ns,sd_mean_delay_ns,mean_jitter_ns,"
             "sd_mean_jitter_ns,drop_ratio,sd_drop_ratio,utilization,sd_utilization,"
             "mean_admitted,utilization_video_raw,utilization_total\n";
        for (Architecture arch : kAllArchitectures) {
            std::vector<double> mos, succ, delay, jitter, drop, util, adm, raw, total;
            for (std::size_t k = 0; k < seeds.size(); ++k) {
                const RunResult& r = cr.at(arch, k);
                mos.push_back(r.mean_mos);
                succ.push_back(r.successful_sessions);
                delay.push_back(r.mean_delay_ns);
                jitter.push_back(r.mean_jitter_ns);
                drop.push_back(r.drop_ratio);
                util.push_back(r.utilization);
                adm.push_back(r.admitted);
                raw.push_back(r.utilization_video_raw);
                total.push_back(r.utilization_total);
            }
            const RefValues ref = reference_for(arch);
            f << architecture_name(arch) << ',' << format_double(ref.mos) << ','
              << ref.sessions << ',' << format_double(mean_of(mos)) << ','
              << format_double(sd_of(mos)) << ',' << format_double(mean_of(succ)) << ','
              << format_double(sd_of(succ)) << ',' << format_double(mean_of(delay)) << ','
              << format_double(sd_of(delay)) << ',' << format_double(mean_of(jitter)) << ','
              << format_double(sd_of(jitter)) << ',' << format_double(mean_of(drop)) << ','
              << format_double(sd_of(drop)) << ',' << format_double(mean_of(util)) << ','
              << format_double(sd_of(util)) << ',' << format_double(mean_of(adm)) << ','
              << format_double(mean_of(raw)) << ',' << format_double(mean_of(total)) << '\n';
        }
    }

    for (Architecture arch : kAllArchitectures) {
        std::vector<double> mos, delay, jitter, drop, util, succ;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            const RunResult& r = cr.at(arch, k);
            for (std::size_t i = 0; i < r.sessions.size(); ++i) {
                if (!r.sessions[i].admitted) continue;
                mos.push_back(r.metrics[i].mean_mos);
                delay.push_back(r.metrics[i].mean_delay_ns);
                jitter.push_back(r.metrics[i].mean_jitter_ns);
                drop.push_back(r.metrics[i].drop_ratio);
            }
            util.push_back(r.utilization);
            succ.push_back(r.successful_sessions);
        }
        const std::string tag = architecture_name(arch);
        const fs::path d(out_dir);
        write_cdf(d / ("cdf_mos_" + tag + ".csv"), mos);
        write_cdf(d / ("cdf_delay_" + tag + ".csv"), delay);
        write_cdf(d / ("cdf_jitter_" + tag + ".csv"), jitter);
        write_cdf(d / ("cdf_drop_ratio_" + tag + ".csv"), drop);
        write_cdf(d / ("cdf_utilization_" + tag + ".csv"), util);
        write_cdf(d / ("cdf_successful_sessions_" + tag + ".csv"), succ);
    }

    {
        auto f = open_or_throw(fs::path(out_dir) / "comparison.txt");
        f << comparison_table(cr);
    }
    return cr;
}

std::string comparison_table(const CompareResult& cr) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-16s %-18s %11s %11s %11s %12s\n", "architecture",
                  "mean MOS (ref)", "successful (ref)", "delay ms", "jitter ms", "drop ratio",
                  "utilization");
    out += line;
    for (Architecture arch : kAllArchitectures) {
        std::vector<double> mos, succ, delay, jitter, drop, util;
        for (std::size_t k = 0; k < cr.seeds.size(); ++k) {
            const RunResult& r = cr.at(arch, k);
            mos.push_back(r.mean_mos);
            succ.push_back(r.successful_sessions);
            delay.push_back(r.mean_delay_ns);
            jitter.push_back(r.mean_jitter_ns);
            drop.push_back(r.drop_ratio);
            util.push_back(r.utilization);
        }
        const RefValues ref = reference_for(arch);
        char mos_col[40], succ_col[40];
        std::snprintf(mos_col, sizeof mos_col, "%.2f (%.1f)", mean_of(mos), ref.mos);
        std::snprintf(succ_col, sizeof succ_col, "%.1f (%d)", mean_of(succ), ref.sessions);
        std::snprintf(line, sizeof line, "%-14s %-16s %-18s %11.2f %11.2f %11.4f %12.4f\n",
                      architecture_name(arch), mos_col, succ_col, mean_of(delay) / 1e6,
                      mean_of(jitter) / 1e6, mean_of(drop), mean_of(util));
        out += line;
    }
    out += "ref: values reported by the reference study for the same scenario.\n";
    return out;
}

} // namespace vqsim
