#pragma once

#include <filesystem>
#include <iosfwd>

#include "convexinit/training.hpp"

namespace convexinit {

// Flat `key = value` configuration with [network], [train] and [data]
// sections, e.g.
//
//   [network]
//   widths = 784,784,784,10
//   variant = icnn_projection
//   init = convex_init
//   [train]
//   learning_rate = 1e-4
//   epochs = 10
//   [data]
//   kind = idx
//   images = train-images-idx3-ubyte
//   labels = train-labels-idx1-ubyte
//
// Unknown sections or keys are rejected. Relative data paths are resolved
// against $CONVEXINIT_DATA_DIR when set, otherwise against `base_dir`.

TrainConfig parse_train_config(std::istream& in, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace convexinit
