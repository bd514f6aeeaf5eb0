#include "convexinit/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "convexinit/errors.hpp"

namespace convexinit {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError("IDX file '" + path.string() + "' is truncated in its header");
  }
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

void check_magic(std::uint32_t got, std::uint32_t expected, const std::filesystem::path& path) {
  if (got != expected) {
    throw FormatError("IDX file '" + path.string() + "' has magic " + hex(got) + ", expected " +
                      hex(expected));
  }
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  check_magic(read_be32(images, 0, images_path), kIdxImagesMagic, images_path);
  check_magic(read_be32(labels, 0, labels_path), kIdxLabelsMagic, labels_path);

  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_images != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n_images) + " images but " +
                      std::to_string(n_labels) + " labels");
  }
  const std::size_t pixels = rows * cols;
  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  if (images.size() < kImageHeader + n_images * pixels) {
    throw FormatError("IDX image file '" + images_path.string() + "' is truncated");
  }
  if (labels.size() < kLabelHeader + n_labels) {
    throw FormatError("IDX label file '" + labels_path.string() + "' is truncated");
  }

  Dataset data;
  data.inputs = Matrix(n_images, pixels);
  auto values = data.inputs.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = double(images[kImageHeader + i]) / 255.0;
  }
  data.labels.resize(n_labels);
  int max_label = -1;
  for (std::size_t i = 0; i < n_labels; ++i) {
    data.labels[i] = labels[kLabelHeader + i];
    max_label = std::max(max_label, data.labels[i]);
  }
  data.n_classes = std::size_t(max_label + 1);
  return data;
}

}  // namespace convexinit
