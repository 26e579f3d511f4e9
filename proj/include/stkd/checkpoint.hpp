#pragma once

#include <string>

#include "stkd/network.hpp"

namespace stkd {

/// Flat binary checkpoint. Layout, all integers little-endian:
///   magic "STKD" | version u32 | layer count u32 |
///   per layer: kind u8 (0 affine, 1 relu);
///   affine adds: out u64 | in u64 | weight f64[out*in] row-major | bias f64[out]
inline constexpr std::uint32_t checkpoint_version = 1;

void save_checkpoint(const Network& net, const std::string& path);

/// Validates magic, version, kind tags, shape consistency and payload length.
Network load_checkpoint(const std::string& path);

}  // namespace stkd
