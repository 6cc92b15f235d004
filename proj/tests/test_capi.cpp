#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vqsim.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct ConfigHandle {
    vqs_config* ptr;
    ConfigHandle() : ptr(vqs_config_create()) { REQUIRE(ptr != nullptr); }
    ~ConfigHandle() { vqs_config_free(ptr); }
    operator vqs_config*() const { return ptr; }
};

void shrink(vqs_config* cfg) {
    REQUIRE(vqs_config_set(cfg, "sim.horizon_s", "20") == VQS_OK);
    REQUIRE(vqs_config_set(cfg, "sources.n_video", "3") == VQS_OK);
    REQUIRE(vqs_config_set(cfg, "sources.n_ftp", "2") == VQS_OK);
}

} // namespace

TEST_CASE("version and status strings exist") {
    CHECK(vqs_version() != nullptr);
    CHECK(std::string(vqs_version()).size() > 0);
    CHECK(std::string(vqs_status_name(VQS_OK)) == "ok");
    CHECK(vqs_status_name(VQS_EPARSE) != nullptr);
    CHECK(vqs_status_name(VQS_ERANGE) != nullptr);
    CHECK(vqs_last_error() != nullptr);
}

TEST_CASE("set and get round-trip through the string interface") {
    ConfigHandle cfg;
    char buf[64];

    REQUIRE(vqs_config_get(cfg, "architecture", buf, sizeof buf) == VQS_OK);
    CHECK(std::string(buf) == "cross");

    REQUIRE(vqs_config_set(cfg, "sim.seed", "42") == VQS_OK);
    REQUIRE(vqs_config_get(cfg, "sim.seed", buf, sizeof buf) == VQS_OK);
    CHECK(std::string(buf) == "42");

    REQUIRE(vqs_config_set(cfg, "architecture", "non_adaptive") == VQS_OK);
    REQUIRE(vqs_config_get(cfg, "architecture", buf, sizeof buf) == VQS_OK);
    CHECK(std::string(buf) == "non_adaptive");
}

TEST_CASE("a short buffer reports the required size") {
    ConfigHandle cfg;
    REQUIRE(vqs_config_set(cfg, "sim.seed", "42") == VQS_OK);

    char tiny[2];
    CHECK(vqs_config_get(cfg, "sim.seed", tiny, sizeof tiny) == VQS_ERANGE);
    CHECK(std::string(vqs_last_error()).find("3 bytes") != std::string::npos);

    // Exactly strlen+1 fits.
    char exact[3];
    CHECK(vqs_config_get(cfg, "sim.seed", exact, sizeof exact) == VQS_OK);
    CHECK(std::string(exact) == "42");
}

TEST_CASE("unknown keys and bad values fail with VQS_EPARSE") {
    ConfigHandle cfg;
    char buf[64];
    CHECK(vqs_config_set(cfg, "no.such.key", "1") == VQS_EPARSE);
    CHECK(std::string(vqs_last_error()).find("no.such.key") != std::string::npos);
    CHECK(vqs_config_get(cfg, "no.such.key", buf, sizeof buf) == VQS_EPARSE);
    CHECK(vqs_config_set(cfg, "sim.seed", "notanumber") == VQS_EPARSE);
    CHECK(vqs_config_set(cfg, "architecture", "hybrid") == VQS_EPARSE);
}

TEST_CASE("null arguments fail with VQS_EINVAL") {
    ConfigHandle cfg;
    char buf[8];
    CHECK(vqs_config_set(nullptr, "sim.seed", "1") == VQS_EINVAL);
    CHECK(vqs_config_set(cfg, nullptr, "1") == VQS_EINVAL);
    CHECK(vqs_config_set(cfg, "sim.seed", nullptr) == VQS_EINVAL);
    CHECK(vqs_config_get(cfg, "sim.seed", nullptr, 8) == VQS_EINVAL);
    CHECK(vqs_config_save(nullptr, "x") == VQS_EINVAL);
    CHECK(vqs_config_validate(nullptr) == VQS_EINVAL);
    CHECK(vqs_run(nullptr, 1, nullptr, 0, nullptr) == VQS_EINVAL);
    CHECK(vqs_compare(cfg, nullptr, 0, nullptr, 0, nullptr, nullptr, 0) == VQS_EINVAL);
    CHECK(vqs_trace_csv(cfg, 2, 1, nullptr) == VQS_EINVAL);
    CHECK(vqs_config_load(nullptr) == nullptr);
    (void)buf;
}

TEST_CASE("save and load agree; a missing file loads as null") {
    fs::path dir = fs::temp_directory_path() / "vqsim_capi_cfg";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path file = dir / "case.cfg";

    ConfigHandle cfg;
    REQUIRE(vqs_config_set(cfg, "sim.seed", "77") == VQS_OK);
    REQUIRE(vqs_config_set(cfg, "architecture", "adaptive") == VQS_OK);
    REQUIRE(vqs_config_save(cfg, file.string().c_str()) == VQS_OK);

    vqs_config* loaded = vqs_config_load(file.string().c_str());
    REQUIRE(loaded != nullptr);
    char buf[64];
    REQUIRE(vqs_config_get(loaded, "sim.seed", buf, sizeof buf) == VQS_OK);
    CHECK(std::string(buf) == "77");
    REQUIRE(vqs_config_get(loaded, "architecture", buf, sizeof buf) == VQS_OK);
    CHECK(std::string(buf) == "adaptive");
    vqs_config_free(loaded);

    CHECK(vqs_config_load((dir / "absent.cfg").string().c_str()) == nullptr);
    CHECK(std::string(vqs_last_error()).find("absent.cfg") != std::string::npos);

    // A file with an invalid value refuses to load and names the key.
    fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "network.queue_capacity_packets = -1\n";
    CHECK(vqs_config_load(bad.string().c_str()) == nullptr);
    CHECK(std::string(vqs_last_error()).find("queue_capacity") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("validate flags out-of-range fields") {
    ConfigHandle cfg;
    CHECK(vqs_config_validate(cfg) == VQS_OK);
    REQUIRE(vqs_config_set(cfg, "admission.beta", "1.5") == VQS_OK); // set is syntax-only
    CHECK(vqs_config_validate(cfg) == VQS_EPARSE);
    CHECK(std::string(vqs_last_error()).find("admission.beta") != std::string::npos);
}

TEST_CASE("a run fills the summary and holds its invariants") {
    ConfigHandle cfg;
    shrink(cfg);

    vqs_summary s;
    REQUIRE(vqs_run(cfg, 9, nullptr, 0, &s) == VQS_OK);
    CHECK(std::string(s.architecture) == "cross");
    CHECK(s.seed == 9);
    CHECK(s.requested == 3);
    CHECK(s.requested == s.admitted + s.rejected);
    CHECK(s.invariants_ok == 1);
    CHECK(s.events_processed > 0);
    CHECK(s.mean_mos >= 1.0);
    CHECK(s.mean_mos <= 5.0);

    // Identical call, identical summary, bit for bit.
    vqs_summary s2;
    REQUIRE(vqs_run(cfg, 9, nullptr, 0, &s2) == VQS_OK);
    CHECK(std::memcmp(&s, &s2, sizeof s) == 0);

    // seed < 0 keeps the config's sim.seed.
    REQUIRE(vqs_config_set(cfg, "sim.seed", "5") == VQS_OK);
    REQUIRE(vqs_run(cfg, -1, nullptr, 0, &s) == VQS_OK);
    CHECK(s.seed == 5);

    // A null summary pointer is allowed.
    CHECK(vqs_run(cfg, 9, nullptr, 0, nullptr) == VQS_OK);
}

TEST_CASE("a run writes its output tree when asked") {
    ConfigHandle cfg;
    shrink(cfg);
    fs::path dir = fs::temp_directory_path() / "vqsim_capi_run";
    fs::remove_all(dir);

    REQUIRE(vqs_run(cfg, 2, dir.string().c_str(), 0, nullptr) == VQS_OK);
    for (const char* name : {"summary.csv", "sessions.csv", "admission.csv", "meta.txt"}) {
        CHECK(fs::exists(dir / name));
    }
    CHECK_FALSE(fs::exists(dir / "packets.csv"));
    fs::remove_all(dir);
}

TEST_CASE("compare returns architecture-major summaries and the table") {
    ConfigHandle cfg;
    shrink(cfg);

    const int64_t seeds[1] = {5};
    vqs_summary sums[3];
    char table[8192];
    REQUIRE(vqs_compare(cfg, seeds, 1, nullptr, 0, sums, table, sizeof table) == VQS_OK);

    CHECK(std::string(sums[0].architecture) == "non_adaptive");
    CHECK(std::string(sums[1].architecture) == "adaptive");
    CHECK(std::string(sums[2].architecture) == "cross");
    for (const auto& s : sums) {
        CHECK(s.seed == 5);
        CHECK(s.invariants_ok == 1);
        CHECK(s.requested == 3);
    }

    std::string t(table);
    CHECK(t.find("non_adaptive") != std::string::npos);
    CHECK(t.find("cross") != std::string::npos);

    // A too-small table buffer reports the required size.
    char tiny[8];
    CHECK(vqs_compare(cfg, seeds, 1, nullptr, 0, nullptr, tiny, sizeof tiny) == VQS_ERANGE);
    CHECK(std::string(vqs_last_error()).find("bytes") != std::string::npos);
}

TEST_CASE("trace export writes one row per frame") {
    ConfigHandle cfg;
    fs::path dir = fs::temp_directory_path() / "vqsim_capi_trace";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path file = dir / "trace.csv";

    REQUIRE(vqs_trace_csv(cfg, 2, 1, file.string().c_str()) == VQS_OK);
    std::string text = slurp(file);
    CHECK(text.rfind("index,type,size_bytes,display_time_ns\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 871); // header + 870 frames

    // Same (config, q, seed) regenerates the same bytes.
    fs::path file2 = dir / "trace2.csv";
    REQUIRE(vqs_trace_csv(cfg, 2, 1, file2.string().c_str()) == VQS_OK);
    CHECK(slurp(file2) == text);

    CHECK(vqs_trace_csv(cfg, 1, 1, file.string().c_str()) == VQS_EINVAL);
    CHECK(vqs_trace_csv(cfg, 32, 1, file.string().c_str()) == VQS_EINVAL);

    fs::remove_all(dir);
}
