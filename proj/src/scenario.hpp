#pragma once

#include "adaptation.hpp"
#include "admission.hpp"
#include "netmodel.hpp"
#include "qoe_metrics.hpp"
#include "sim_core.hpp"
#include "video_traffic.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqsim {

enum class Architecture : std::uint8_t { non_adaptive, adaptive, cross };

const char* architecture_name(Architecture a);

enum class GateChoice : std::uint8_t { auto_pick, always_admit, bandwidth_check, qoe_aware };
enum class AdaptationMode : std::uint8_t { auto_pick, on, off };
enum class ArrivalKind : std::uint8_t { per_slot, poisson };

// Full run description. Every field maps to one flat dotted key in the
// config file; defaults reproduce the reference comparison: a 7 Mbps
// dumbbell, 24 video and 24 FTP sources, 500 s horizon.
struct ScenarioConfig {
    Architecture architecture = Architecture::cross;

    double horizon_s = 500.0;
    std::int64_t seed = 1;

    std::int64_t capacity_bps = 7'000'000;
    int queue_capacity = 2000;
    double bottleneck_prop_delay_ms = 10.0;
    std::int64_t access_rate_bps = 100'000'000;
    double access_prop_delay_ms = 1.0;

    int n_video = 24;
    int n_ftp = 24;

    ContentParams content;
    MosCurve mos_curve;

    // auto_pick: qoe_aware for cross, always_admit otherwise.
    GateChoice admission_gate = GateChoice::auto_pick;
    double admission_beta = 0.9;
    double admission_theta = 3.5;
    int max_sessions = 24;
    double admission_window_s = 1.0;

    // auto_pick: off for non_adaptive, on otherwise.
    AdaptationMode adaptation_mode = AdaptationMode::auto_pick;
    RateController controller = RateController::tfrc;
    double report_interval_s = 1.0;

    double success_threshold = 0.75;
    JitterEstimator jitter_estimator = JitterEstimator::mean_abs;

    ArrivalKind arrival_process = ArrivalKind::per_slot;
    double poisson_rate_per_s = 1.0;
};

// Config and input errors carry field-precise context in what().
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Flat `key = value` document, `#` comments, blank lines ignored.
// Unknown keys and out-of-range values are rejected with the offending
// key (and line, when parsing a file) named. save_config emits the
// canonical form: every key, fixed order, shortest exact float spelling,
// so save(load(x)) is byte-stable.
ScenarioConfig parse_config(const std::string& text, const std::string& origin);
ScenarioConfig load_config(const std::string& path);
std::string save_config(const ScenarioConfig& cfg);
void save_config_file(const ScenarioConfig& cfg, const std::string& path);

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const ScenarioConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

// Throws config_error naming every violated field constraint.
void validate(const ScenarioConfig& cfg);

AdmissionGate effective_gate(const ScenarioConfig& cfg);
bool adaptation_enabled(const ScenarioConfig& cfg);

// Session request times, strictly increasing, independent of the
// architecture so all arms of a comparison see identical arrivals.
// per_slot: one request per 1 s slot at a uniform offset. poisson:
// exponential interarrivals at poisson_rate_per_s, truncated at the
// horizon.
std::vector<SimTime> arrival_times(const ScenarioConfig& cfg);

// Per-session noise stream seed; a pure mix of (run seed, session id).
std::uint64_t session_noise_seed(std::int64_t run_seed, int session_id);

struct AdmissionLogRow {
    std::int64_t time_ns = 0;
    int session_id = -1;
    AdmissionGate policy = AdmissionGate::bandwidth_check;
    bool admitted = false;
    RejectReason reason = RejectReason::none;
    double measured_bps = 0.0;
    double residual_bps = 0.0;
    int recommended_q = kQuantMin;
};

struct AdaptationLogRow {
    std::int64_t time_ns = 0;
    int session_id = -1;
    double p = 0.0;
    std::int64_t rtt_ns = 0;
    double allowed_bps = 0.0;
    int q = kQuantMin;
};

struct ConservationCheck {
    std::int64_t sent = 0;
    std::int64_t received = 0;
    std::int64_t dropped = 0;
    std::int64_t in_flight = 0;

    bool exact() const { return sent == received + dropped + in_flight; }
};

struct RunResult {
    Architecture architecture = Architecture::cross;
    std::int64_t seed = 0;

    // The six headline metrics, aggregated over admitted sessions.
    // utilization counts decodable video goodput against the
    // capacity-horizon product; the raw delivered shares sit next to it.
    double mean_mos = 1.0;
    int successful_sessions = 0;
    double mean_delay_ns = 0.0;
    double mean_jitter_ns = 0.0;
    double drop_ratio = 0.0;
    double utilization = 0.0;
    double utilization_video_raw = 0.0;
    double utilization_total = 0.0;

    int requested = 0;
    int admitted = 0;
    int rejected = 0;

    std::vector<SessionRecord> sessions;  // one per requested session
    std::vector<SessionMetrics> metrics;  // parallel to sessions
    std::vector<AdmissionLogRow> admission_log;
    std::vector<AdaptationLogRow> adaptation_log;

    Link::Stats bottleneck_stats;
    Link::Stats aggregate_stats;
    ConservationCheck conservation;       // every flow kind
    ConservationCheck video_conservation; // video data packets only
    std::uint64_t events_processed = 0;

    // Invariant instrumentation, expected to stay zero / true.
    bool jitter_oracle_match = true;
    std::uint64_t admissions_over_cap = 0;
    std::uint64_t qoe_gate_violations = 0;
    std::uint64_t drops_not_at_capacity = 0;
    std::uint64_t fifo_violations = 0;
    std::int64_t idle_nonempty_ticks = 0;
    std::size_t max_bottleneck_occupancy = 0;
};

// Executes one run. With a non-empty out_dir writes sessions.csv,
// summary.csv, cdf_<metric>.csv, admission.csv, adaptation.csv, meta.txt
// and optionally packets.csv there. keep_raw preserves the per-packet and
// per-frame logs on the returned records; by default they are released
// once metrics are finalized.
RunResult run(const ScenarioConfig& cfg, const std::string& out_dir,
              bool packet_log = false, bool keep_raw = false);

struct CompareResult {
    std::vector<std::int64_t> seeds;
    // Runs for architecture a, seed index k at [a * seeds.size() + k],
    // with a in declaration order non_adaptive, adaptive, cross.
    std::vector<RunResult> runs;

    const RunResult& at(Architecture a, std::size_t seed_index) const;
};

// Runs the three architectures over the same seeds (identical arrivals
// and background schedules per seed) and writes comparison.csv, the
// pooled per-architecture CDFs, and per-run directories under out_dir.
CompareResult compare(const ScenarioConfig& base, const std::vector<std::int64_t>& seeds,
                      const std::string& out_dir, bool packet_log = false);

// Human-readable comparison table with the reference values quoted next
// to the measured means.
std::string comparison_table(const CompareResult& result);

const char* version_string();

} // namespace vqsim
