#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "convexinit/network.hpp"

namespace convexinit {

// Line-oriented text checkpoint:
//
//   ICNN-CKPT v1
//   config widths=784,784,10 alpha=0 variant=icnn_projection skip=0 init=convex_init ...
//   tensor layer0.weight <rows> <cols>
//   <row-major values, one matrix row per line, shortest round-trip decimals>
//   tensor layer0.bias 1 <cols>
//   ...
//
// Values round-trip bit-exactly.

inline constexpr const char* kCheckpointMagic = "ICNN-CKPT";
inline constexpr const char* kCheckpointVersion = "v1";

void save_checkpoint(const Network& net, std::ostream& out);
std::string checkpoint_string(const Network& net);
/// Throws FormatError on an unknown version or malformed contents.
Network load_checkpoint(std::istream& in);
Network load_checkpoint(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
/// Strict full-string parse; throws FormatError on trailing characters.
double parse_double(std::string_view text);

}  // namespace convexinit
