#include "video_traffic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace vqsim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_quant(int q) {
    if (q < kQuantMin || q > kQuantMax) {
        throw std::invalid_argument("quantizer scale out of [2,31]: q=" + std::to_string(q));
    }
}

} // namespace

std::vector<double> size_noise(const ContentParams& content, std::uint64_t seed) {
    std::vector<double> noise(static_cast<std::size_t>(content.frames), 1.0);
    if (content.sigma == 0.0) return noise;
    // Explicit Box-Muller on mt19937_64 output rather than
    // std::normal_distribution, whose draw sequence is
    // implementation-defined.
    std::mt19937_64 rng(seed);
    constexpr double inv = 1.0 / 18446744073709551616.0; // 2^-64
    for (auto& n : noise) {
        double u1 = (static_cast<double>(rng()) + 0.5) * inv;
        double u2 = (static_cast<double>(rng()) + 0.5) * inv;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
        n = std::exp(content.sigma * z);
    }
    return noise;
}

double quant_scale(const ContentParams& content, int q) {
    require_quant(q);
    return std::pow(2.0 / static_cast<double>(q), content.alpha);
}

std::int64_t frame_size_bytes(const ContentParams& content, int q, FrameType type,
                              double noise) {
    double ref = static_cast<double>(type == FrameType::I ? content.i_frame_bytes
                                                          : content.p_frame_bytes);
    std::int64_t size = std::llround(ref * quant_scale(content, q) * noise);
    return size < 1 ? 1 : size;
}

double nominal_rate_bps(const ContentParams& content, int q) {
    require_quant(q);
    double gop_bytes = static_cast<double>(content.i_frame_bytes) +
                       static_cast<double>(content.gop - 1) *
                           static_cast<double>(content.p_frame_bytes);
    return gop_bytes * quant_scale(content, q) * 8.0 * content.fps / content.gop;
}

VideoTrace generate_trace(const ContentParams& content, int q, std::uint64_t seed) {
    require_quant(q);
    auto noise = size_noise(content, seed);
    VideoTrace trace;
    trace.q = q;
    trace.frames.reserve(static_cast<std::size_t>(content.frames));
    const std::int64_t interval = frame_interval_ns(content.fps);
    for (int i = 0; i < content.frames; ++i) {
        FrameSpec f;
        f.index = i;
        f.type = frame_type_at(content, i);
        f.size_bytes = frame_size_bytes(content, q, f.type, noise[static_cast<std::size_t>(i)]);
        f.display_time = SimTime{interval * i};
        trace.frames.push_back(f);
    }
    return trace;
}

std::vector<PacketChunk> packetize(std::int64_t frame_bytes, std::int64_t max_payload) {
    std::vector<PacketChunk> chunks;
    if (frame_bytes <= 0) return chunks;
    std::int64_t n = (frame_bytes + max_payload - 1) / max_payload;
    chunks.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t payload = (i + 1 < n) ? max_payload : frame_bytes - max_payload * (n - 1);
        chunks.push_back(PacketChunk{payload, payload + kPacketHeaderBytes});
    }
    return chunks;
}

std::int64_t frame_wire_bytes(std::int64_t frame_bytes, std::int64_t max_payload) {
    if (frame_bytes <= 0) return 0;
    std::int64_t n = (frame_bytes + max_payload - 1) / max_payload;
    return frame_bytes + n * kPacketHeaderBytes;
}

} // namespace vqsim
