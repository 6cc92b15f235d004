#pragma once

#include "sim_core.hpp"

#include <cstdint>
#include <vector>

namespace vqsim {

inline constexpr int kQuantMin = 2;
inline constexpr int kQuantMax = 31;

enum class FrameType : std::uint8_t { I, P };

// Synthetic stand-in for an encoded low-motion clip: mean frame sizes at
// the reference quantizer q=2, scaled down the 30-level ladder by
// (2/q)^alpha with lognormal per-frame size noise.
struct ContentParams {
    int frames = 870;
    int fps = 30;
    int gop = 30;
    std::int64_t i_frame_bytes = 9000; // mean I size at q=2
    std::int64_t p_frame_bytes = 1500; // mean P size at q=2
    double alpha = 0.75;
    double sigma = 0.2;
    std::int64_t max_payload_bytes = 1024;
};

struct FrameSpec {
    int index = 0;
    FrameType type = FrameType::I;
    std::int64_t size_bytes = 0;
    SimTime display_time{0}; // offset from trace start
};

struct VideoTrace {
    int q = kQuantMin;
    std::vector<FrameSpec> frames;
};

// Fixed 30 fps cadence: round(1e9/30) ns between consecutive frames.
inline constexpr std::int64_t frame_interval_ns(int fps) {
    return (1'000'000'000 + fps / 2) / fps;
}

// Per-frame lognormal size multipliers with median 1; a pure function of
// (content, seed), shared across quantizer levels so a level switch
// rescales sizes without changing the frame-to-frame complexity profile.
std::vector<double> size_noise(const ContentParams& content, std::uint64_t seed);

// Sigma-free mean bitrate of the trace at quantizer q; strictly
// decreasing in q.
double nominal_rate_bps(const ContentParams& content, int q);

// Deterministic in (content, q, seed). Throws std::invalid_argument for q
// outside [2, 31].
VideoTrace generate_trace(const ContentParams& content, int q, std::uint64_t seed);

double quant_scale(const ContentParams& content, int q);

std::int64_t frame_size_bytes(const ContentParams& content, int q, FrameType type,
                              double noise);

inline FrameType frame_type_at(const ContentParams& content, int index_in_pass) {
    return index_in_pass % content.gop == 0 ? FrameType::I : FrameType::P;
}

// Wire-size bookkeeping: 8 B UDP-equivalent + 20 B IP-equivalent headers
// per packet.
inline constexpr std::int64_t kPacketHeaderBytes = 28;
inline constexpr std::int64_t kFeedbackWireBytes = 40; // acks and receiver reports

struct PacketChunk {
    std::int64_t payload_bytes;
    std::int64_t wire_bytes;
};

// Splits a frame into max_payload-sized chunks; all but the last carry a
// full payload, the last carries the remainder.
std::vector<PacketChunk> packetize(std::int64_t frame_bytes, std::int64_t max_payload = 1024);

// Wire bytes the frame occupies once packetized.
std::int64_t frame_wire_bytes(std::int64_t frame_bytes, std::int64_t max_payload = 1024);

} // namespace vqsim
