// Binary motion-flow file format (MFLO).
//
// Little-endian layout:
//   magic "MFLO" (4 bytes)
//   u32 width, u32 height
//   width*height f32 u-values, row-major
//   width*height f32 v-values, row-major
#ifndef FLOWDEBLUR_FLOW_IO_HPP
#define FLOWDEBLUR_FLOW_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowdeblur/flow_map.hpp"

namespace flowdeblur {

MotionFlowMap read_flow(const std::filesystem::path& path);
void write_flow(const MotionFlowMap& flow, const std::filesystem::path& path);

MotionFlowMap decode_flow(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_flow(const MotionFlowMap& flow);

} // namespace flowdeblur

#endif
