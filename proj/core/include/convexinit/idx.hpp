#pragma once

#include <cstdint>
#include <filesystem>

#include "convexinit/training.hpp"

namespace convexinit {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads a big-endian IDX image/label file pair. Pixels are scaled by 1/255.
/// Throws FormatError for a bad magic number, truncated data or a count
/// mismatch between the two files.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

}  // namespace convexinit
