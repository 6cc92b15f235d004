// Command-line front end. Talks to the simulator exclusively through the
// C API in vqsim.h, the same surface any other embedding would use.

#include "vqsim.h"

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(vqs_config* c) const { vqs_config_free(c); }
};
using ConfigHandle = std::unique_ptr<vqs_config, ConfigDeleter>;

int exit_code_for(vqs_status st) { return st == VQS_ECONTRACT ? 2 : 1; }

int fail(vqs_status st) {
    std::fprintf(stderr, "error (%s): %s\n", vqs_status_name(st), vqs_last_error());
    return exit_code_for(st);
}

ConfigHandle make_config(const std::string& config_path,
                         const std::vector<std::string>& overrides, int& err) {
    ConfigHandle cfg(config_path.empty() ? vqs_config_create()
                                         : vqs_config_load(config_path.c_str()));
    if (!cfg) {
        err = fail(VQS_EPARSE);
        return nullptr;
    }
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            err = 1;
            return nullptr;
        }
        vqs_status st = vqs_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                       kv.substr(eq + 1).c_str());
        if (st != VQS_OK) {
            err = fail(st);
            return nullptr;
        }
    }
    err = 0;
    return cfg;
}

// Accepts "3", "1,4,9" and "1..10".
std::vector<int64_t> parse_seed_list(const std::string& text, bool& ok) {
    std::vector<int64_t> seeds;
    ok = false;
    auto range = text.find("..");
    try {
        if (range != std::string::npos) {
            int64_t lo = std::stoll(text.substr(0, range));
            int64_t hi = std::stoll(text.substr(range + 2));
            if (hi < lo) return seeds;
            for (int64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        } else {
            std::size_t pos = 0;
            while (pos <= text.size()) {
                auto comma = text.find(',', pos);
                if (comma == std::string::npos) comma = text.size();
                seeds.push_back(std::stoll(text.substr(pos, comma - pos)));
                pos = comma + 1;
            }
        }
    } catch (...) {
        return seeds;
    }
    ok = !seeds.empty();
    return seeds;
}

void print_summary(const vqs_summary& s) {
    std::printf("architecture        %s\n", s.architecture);
    std::printf("seed                %" PRId64 "\n", s.seed);
    std::printf("sessions            %d requested, %d admitted, %d rejected\n", s.requested,
                s.admitted, s.rejected);
    std::printf("mean MOS            %.3f\n", s.mean_mos);
    std::printf("successful sessions %d\n", s.successful_sessions);
    std::printf("mean delay          %.3f ms\n", s.mean_delay_ns / 1e6);
    std::printf("mean jitter         %.3f ms\n", s.mean_jitter_ns / 1e6);
    std::printf("drop ratio          %.4f\n", s.drop_ratio);
    std::printf("utilization         %.4f (raw video %.4f, all traffic %.4f)\n",
                s.utilization, s.utilization_video_raw, s.utilization_total);
    std::printf("events processed    %" PRIu64 "\n", s.events_processed);
    std::printf("invariants          %s\n", s.invariants_ok ? "ok" : "VIOLATED");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vqsim: packet-level comparison of video delivery architectures"};
    app.set_version_flag("--version", std::string(vqs_version()));
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_text, trace_out;
    std::vector<std::string> overrides;
    int64_t seed = -1;
    int trace_q = 2;
    bool packet_log = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (defaults built in)");
        sub->add_option("--set", overrides, "override one key, key=value")
            ->type_name("KEY=VALUE");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "simulate one architecture once");
    add_common(cmd_run);
    cmd_run->add_option("--seed", seed, "override sim.seed");
    cmd_run->add_option("--out", out_dir, "output directory")->required();
    cmd_run->add_flag("--packet-log", packet_log, "also write per-packet events");

    CLI::App* cmd_compare =
        app.add_subcommand("compare", "run all three architectures over a seed set");
    add_common(cmd_compare);
    cmd_compare->add_option("--seeds", seeds_text, "seed list: n, n,m,... or n..m")
        ->required();
    cmd_compare->add_option("--out", out_dir, "output directory")->required();
    cmd_compare->add_flag("--packet-log", packet_log, "also write per-packet events");

    CLI::App* cmd_trace =
        app.add_subcommand("trace", "emit the frame schedule at a fixed quantizer");
    add_common(cmd_trace);
    cmd_trace->add_option("--q", trace_q, "quantizer, 2..31")->required();
    cmd_trace->add_option("--seed", seed, "override sim.seed");
    cmd_trace->add_option("--out", trace_out, "output CSV file")->required();

    CLI11_PARSE(app, argc, argv);

    int err = 0;
    ConfigHandle cfg = make_config(config_path, overrides, err);
    if (!cfg) return err;

    if (cmd_run->parsed()) {
        vqs_status st = vqs_config_validate(cfg.get());
        if (st != VQS_OK) return fail(st);
        vqs_summary summary;
        st = vqs_run(cfg.get(), seed, out_dir.c_str(), packet_log ? 1 : 0, &summary);
        if (st != VQS_OK) return fail(st);
        print_summary(summary);
        std::printf("outputs written to %s\n", out_dir.c_str());
        return summary.invariants_ok ? 0 : 2;
    }

    if (cmd_compare->parsed()) {
        bool ok = false;
        std::vector<int64_t> seeds = parse_seed_list(seeds_text, ok);
        if (!ok) {
            std::fprintf(stderr, "error: cannot parse --seeds '%s'\n", seeds_text.c_str());
            return 1;
        }
        std::vector<vqs_summary> summaries(3 * seeds.size());
        std::vector<char> table(8192);
        vqs_status st =
            vqs_compare(cfg.get(), seeds.data(), seeds.size(), out_dir.c_str(),
                        packet_log ? 1 : 0, summaries.data(), table.data(), table.size());
        if (st != VQS_OK) return fail(st);
        std::printf("%s", table.data());
        bool invariants_ok = true;
        for (const auto& s : summaries) invariants_ok = invariants_ok && s.invariants_ok;
        std::printf("runs: %zu, outputs written to %s\n", summaries.size(), out_dir.c_str());
        return invariants_ok ? 0 : 2;
    }

    // trace
    vqs_status st = vqs_trace_csv(cfg.get(), trace_q, seed, trace_out.c_str());
    if (st != VQS_OK) return fail(st);
    std::printf("trace written to %s\n", trace_out.c_str());
    return 0;
}
