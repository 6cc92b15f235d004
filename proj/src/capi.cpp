#include "vqsim.h"

#include "scenario.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

struct vqs_config {
    vqsim::ScenarioConfig cfg;
};

namespace {

thread_local std::string g_last_error = "ok";

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
vqs_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const vqsim::config_error& e) {
        set_error(e.what());
        return VQS_EPARSE;
    } catch (const vqsim::contract_violation& e) {
        set_error(e.what());
        return VQS_ECONTRACT;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return VQS_EINVAL;
    } catch (const std::exception& e) {
        set_error(e.what());
        return VQS_EIO;
    } catch (...) {
        set_error("unknown failure");
        return VQS_EIO;
    }
}

bool invariants_held(const vqsim::RunResult& r, const vqsim::ScenarioConfig& cfg) {
    return r.conservation.exact() && r.video_conservation.exact() &&
           r.jitter_oracle_match && r.admissions_over_cap == 0 &&
           r.qoe_gate_violations == 0 && r.drops_not_at_capacity == 0 &&
           r.fifo_violations == 0 && r.idle_nonempty_ticks == 0 &&
           r.max_bottleneck_occupancy <= static_cast<std::size_t>(cfg.queue_capacity);
}

void fill_summary(vqs_summary* out, const vqsim::RunResult& r,
                  const vqsim::ScenarioConfig& cfg) {
    if (!out) return;
    std::memset(out, 0, sizeof *out);
    std::snprintf(out->architecture, sizeof out->architecture, "%s",
                  vqsim::architecture_name(r.architecture));
    out->seed = r.seed;
    out->mean_mos = r.mean_mos;
    out->successful_sessions = r.successful_sessions;
    out->mean_delay_ns = r.mean_delay_ns;
    out->mean_jitter_ns = r.mean_jitter_ns;
    out->drop_ratio = r.drop_ratio;
    out->utilization = r.utilization;
    out->utilization_video_raw = r.utilization_video_raw;
    out->utilization_total = r.utilization_total;
    out->requested = r.requested;
    out->admitted = r.admitted;
    out->rejected = r.rejected;
    out->events_processed = r.events_processed;
    out->invariants_ok = invariants_held(r, cfg) ? 1 : 0;
}

} // namespace

extern "C" {

const char* vqs_version(void) { return vqsim::version_string(); }

const char* vqs_status_name(vqs_status s) {
    switch (s) {
    case VQS_OK: return "ok";
    case VQS_EINVAL: return "invalid argument";
    case VQS_EPARSE: return "config error";
    case VQS_EIO: return "io error";
    case VQS_ECONTRACT: return "contract violation";
    case VQS_ERANGE: return "buffer too small";
    }
    return "unknown status";
}

const char* vqs_last_error(void) { return g_last_error.c_str(); }

vqs_config* vqs_config_create(void) {
    try {
        return new vqs_config{};
    } catch (...) {
        set_error("out of memory");
        return nullptr;
    }
}

vqs_config* vqs_config_load(const char* path) {
    if (!path) {
        set_error("path is null");
        return nullptr;
    }
    vqs_config* out = nullptr;
    vqs_status st = guarded([&] {
        out = new vqs_config{vqsim::load_config(path)};
        return VQS_OK;
    });
    return st == VQS_OK ? out : nullptr;
}

void vqs_config_free(vqs_config* cfg) { delete cfg; }

vqs_status vqs_config_set(vqs_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        set_error("null argument");
        return VQS_EINVAL;
    }
    return guarded([&] {
        vqsim::set_key(cfg->cfg, key, value);
        return VQS_OK;
    });
}

vqs_status vqs_config_get(const vqs_config* cfg, const char* key, char* buf,
                          size_t buf_len) {
    if (!cfg || !key || !buf) {
        set_error("null argument");
        return VQS_EINVAL;
    }
    std::string value;
    vqs_status st = guarded([&] {
        value = vqsim::get_key(cfg->cfg, key);
        return VQS_OK;
    });
    if (st != VQS_OK) return st;
    if (value.size() + 1 > buf_len) {
        set_error("value for '" + std::string(key) + "' needs " +
                  std::to_string(value.size() + 1) + " bytes");
        return VQS_ERANGE;
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return VQS_OK;
}

vqs_status vqs_config_save(const vqs_config* cfg, const char* path) {
    if (!cfg || !path) {
        set_error("null argument");
        return VQS_EINVAL;
    }
    return guarded([&] {
        vqsim::save_config_file(cfg->cfg, path);
        return VQS_OK;
    });
}

vqs_status vqs_config_validate(const vqs_config* cfg) {
    if (!cfg) {
        set_error("null argument");
        return VQS_EINVAL;
    }
    return guarded([&] {
        vqsim::validate(cfg->cfg);
        return VQS_OK;
    });
}

vqs_status vqs_run(const vqs_config* cfg, int64_t seed, const char* out_dir, int packet_log,
                   vqs_summary* summary) {
    if (!cfg) {
        set_error("null config");
        return VQS_EINVAL;
    }
    return guarded([&] {
        vqsim::ScenarioConfig c = cfg->cfg;
        if (seed >= 0) c.seed = seed;
        vqsim::RunResult r =
            vqsim::run(c, out_dir ? std::string(out_dir) : std::string(), packet_log != 0);
        fill_summary(summary, r, c);
        return VQS_OK;
    });
}

vqs_status vqs_compare(const vqs_config* cfg, const int64_t* seeds, size_t n_seeds,
                       const char* out_dir, int packet_log, vqs_summary* summaries,
                       char* table_buf, size_t table_len) {
    if (!cfg || !seeds || n_seeds == 0) {
        set_error("null config or empty seed list");
        return VQS_EINVAL;
    }
    return guarded([&] {
        std::vector<std::int64_t> seed_vec(seeds, seeds + n_seeds);
        vqsim::CompareResult cr =
            vqsim::compare(cfg->cfg, seed_vec,
                           out_dir ? std::string(out_dir) : std::string(), packet_log != 0);
        if (summaries) {
            for (std::size_t i = 0; i < cr.runs.size(); ++i)
                fill_summary(&summaries[i], cr.runs[i], cfg->cfg);
        }
        if (table_buf) {
            std::string table = vqsim::comparison_table(cr);
            if (table.size() + 1 > table_len) {
                set_error("comparison table needs " + std::to_string(table.size() + 1) +
                          " bytes");
                return VQS_ERANGE;
            }
            std::memcpy(table_buf, table.c_str(), table.size() + 1);
        }
        return VQS_OK;
    });
}

vqs_status vqs_trace_csv(const vqs_config* cfg, int q, int64_t seed, const char* path) {
    if (!cfg || !path) {
        set_error("null argument");
        return VQS_EINVAL;
    }
    return guarded([&] {
        const vqsim::ScenarioConfig& c = cfg->cfg;
        const std::int64_t use_seed = seed >= 0 ? seed : c.seed;
        vqsim::VideoTrace trace = vqsim::generate_trace(
            c.content, q, vqsim::session_noise_seed(use_seed, 0));
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + std::string(path) +
                                         "' for writing");
        f << "index,type,size_bytes,display_time_ns\n";
        for (const auto& fr : trace.frames) {
            f << fr.index << ',' << (fr.type == vqsim::FrameType::I ? 'I' : 'P') << ','
              << fr.size_bytes << ',' << fr.display_time.ticks << '\n';
        }
        return VQS_OK;
    });
}

} // extern "C"
