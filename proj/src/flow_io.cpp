#include "flowdeblur/flow_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace flowdeblur {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'L', 'O'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_flow(const MotionFlowMap& flow) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + 8 * flow.pixels());
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, static_cast<std::uint32_t>(flow.width));
    put_u32(out, static_cast<std::uint32_t>(flow.height));
    for (float v : flow.u) put_f32(out, v);
    for (float v : flow.v) put_f32(out, v);
    return out;
}

MotionFlowMap decode_flow(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("decode_flow: bad magic, not an MFLO stream");
    const std::uint32_t w = get_u32(bytes.data() + 4);
    const std::uint32_t h = get_u32(bytes.data() + 8);
    if (w == 0 || h == 0 ||
        w > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
        h > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("decode_flow: invalid dimensions");
    const std::size_t count = static_cast<std::size_t>(w) * h;
    if (bytes.size() != 12 + 8 * count)
        throw FormatError("decode_flow: payload size does not match header");

    MotionFlowMap flow(static_cast<int>(w), static_cast<int>(h));
    const std::uint8_t* p = bytes.data() + 12;
    for (std::size_t i = 0; i < count; ++i, p += 4) flow.u[i] = get_f32(p);
    for (std::size_t i = 0; i < count; ++i, p += 4) flow.v[i] = get_f32(p);
    return flow;
}

MotionFlowMap read_flow(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_flow: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_flow(bytes);
}

void write_flow(const MotionFlowMap& flow, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_flow(flow);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_flow: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_flow: write failed for " + path.string());
}

} // namespace flowdeblur
