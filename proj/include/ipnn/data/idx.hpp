// Copyright 2026 The ipnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipnn/data/dataset.hpp"

namespace ipnn::data {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Raw IDX payload: dimension sizes plus unsigned bytes.
struct IdxFile {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

namespace detail {

/// gzread passes uncompressed files through unchanged, so one reader serves
/// both "file" and "file.gz".
class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path) : path_(path.string()) {
    file_ = gzopen(path_.c_str(), "rb");
    if (!file_) throw FormatError(path_ + ": cannot open");
  }
  ~GzReader() { gzclose(file_); }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n, const char* what) {
    auto* out = static_cast<unsigned char*>(dst);
    std::size_t got = 0;
    while (got < n) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - got, 1U << 30));
      const int r = gzread(file_, out + got, chunk);
      if (r <= 0) {
        throw FormatError(path_ + ": truncated " + what + " at offset " + std::to_string(offset_ + got) +
                          " (needed " + std::to_string(n) + " bytes)");
      }
      got += static_cast<std::size_t>(r);
    }
    offset_ += n;
  }

  std::uint32_t read_be32(const char* what) {
    std::array<unsigned char, 4> b{};
    read(b.data(), 4, what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  std::size_t offset() const noexcept { return offset_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  gzFile file_ = nullptr;
  std::size_t offset_ = 0;
};

}  // namespace detail

/// Reads an IDX file (raw or gzip) and checks its magic number.
inline IdxFile read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  detail::GzReader in(path);
  const std::uint32_t magic = in.read_be32("magic number");
  if (magic != expected_magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x at offset 0 (expected 0x%08x)", magic, expected_magic);
    throw FormatError(in.path() + ": " + buf);
  }
  IdxFile f;
  const std::size_t ndims = magic & 0xFF;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    f.dims.push_back(in.read_be32("dimension size"));
    count *= f.dims.back();
  }
  f.payload.resize(count);
  in.read(f.payload.data(), count, "payload");
  return f;
}

/// MNIST images (n x 784, scaled to [0, 1]) with one-hot-able labels 0..9.
inline Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const IdxFile images = read_idx(images_path, kIdxImagesMagic);
  const IdxFile labels = read_idx(labels_path, kIdxLabelsMagic);
  if (images.dims.size() != 3) throw FormatError(images_path.string() + ": expected 3 dimensions");
  if (labels.dims.size() != 1) throw FormatError(labels_path.string() + ": expected 1 dimension");
  if (images.dims[0] != labels.dims[0]) {
    throw FormatError("image count " + std::to_string(images.dims[0]) + " != label count " +
                      std::to_string(labels.dims[0]));
  }
  const std::size_t n = images.dims[0];
  const std::size_t d = std::size_t{images.dims[1]} * images.dims[2];
  Dataset ds;
  ds.name = "mnist";
  ds.num_classes = 10;
  ds.inputs = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n * d; ++i) ds.inputs[i] = images.payload[i] / 255.0;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.payload[i] > 9) {
      throw FormatError(labels_path.string() + ": label " + std::to_string(labels.payload[i]) + " at offset " +
                        std::to_string(8 + i));
    }
    ds.labels[i] = labels.payload[i];
  }
  return ds;
}

/// Locates "<prefix>-images-idx3-ubyte[.gz]" in a directory.
inline std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {"", ".gz"}) {
    auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  throw FormatError(dir.string() + ": no " + stem + "[.gz]");
}

/// Train ("train") or test ("t10k") split from a directory of IDX files.
inline Dataset load_mnist_dir(const std::filesystem::path& dir, const std::string& split) {
  return load_mnist(find_idx(dir, split + "-images-idx3-ubyte"), find_idx(dir, split + "-labels-idx1-ubyte"));
}

}  // namespace ipnn::data
