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

#include <filesystem>
#include <fstream>
#include <string>

#include "ipnn/harness/trainer.hpp"
#include "ipnn/head/snapshot.hpp"

namespace ipnn::harness {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'I', 'P', 'N', 'N', 'C', 'K', 'P', '1'};

/// Checkpoint layout (little-endian):
///   8-byte magic "IPNNCKP1", u64 config length + resolved config text,
///   u64 layer-width count + widths, u64 tensor count, per tensor
///   (u64 rank, u64 dims..., f64 values), u64 accumulator count, then one
///   accumulator snapshot per accumulator (main first, then sub-tasks).
inline void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg, const IpnnModel& model,
                            bool include_ring) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write checkpoint " + path.string());
  namespace io = head::io;
  os.write(kCheckpointMagic, 8);
  const std::string text = cfg.to_text();
  io::write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto& widths = model.backbone.widths();
  io::write_u64(os, widths.size());
  for (std::size_t w : widths) io::write_u64(os, w);
  const auto& params = model.backbone.parameters();
  io::write_u64(os, params.size());
  for (const auto& p : params) {
    io::write_u64(os, p.value().rank());
    for (std::size_t d : p.value().shape()) io::write_u64(os, d);
    io::write_values(os, p.value());
  }
  io::write_u64(os, 1 + model.subs.size());
  head::write_snapshot(os, model.main, include_ring);
  for (const auto& s : model.subs) head::write_snapshot(os, s, include_ring);
  if (!os) throw FormatError("failed writing checkpoint " + path.string());
}

struct LoadedCheckpoint {
  ExperimentConfig config;
  IpnnModel model;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  namespace io = head::io;
  try {
    char magic[8];
    if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kCheckpointMagic)) {
      throw FormatError(path.string() + ": not an ipnn checkpoint");
    }
    const std::size_t len = io::read_u64(is, "config length");
    if (len > (1U << 20)) throw FormatError(path.string() + ": implausible config length");
    std::string text(len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError(path.string() + ": truncated config");
    LoadedCheckpoint ck{parse_config_text(text), {}};

    std::vector<std::size_t> widths(io::read_u64(is, "width count"));
    if (widths.size() < 2 || widths.size() > 64) throw FormatError(path.string() + ": bad layer count");
    for (auto& w : widths) w = io::read_u64(is, "width");
    std::vector<Tensor> tensors(io::read_u64(is, "tensor count"));
    if (tensors.size() != 2 * (widths.size() - 1)) throw FormatError(path.string() + ": tensor count mismatch");
    for (auto& t : tensors) {
      numgrad::Shape shape(io::read_u64(is, "rank"));
      if (shape.empty() || shape.size() > 2) throw FormatError(path.string() + ": bad tensor rank");
      for (auto& d : shape) d = io::read_u64(is, "dimension");
      t = Tensor(shape);
      io::read_values(is, t, "tensor");
    }
    ck.model.backbone = numgrad::Mlp::from_tensors(widths, std::move(tensors));
    ck.model.split = ck.config.split;

    const std::size_t accs = io::read_u64(is, "accumulator count");
    if (accs != 1 + ck.config.sub_tasks.size()) throw FormatError(path.string() + ": accumulator count mismatch");
    ck.model.main = head::read_snapshot(is);
    for (std::size_t i = 1; i < accs; ++i) ck.model.subs.push_back(head::read_snapshot(is));
    if (!(ck.model.main.split() == ck.config.split)) {
      throw FormatError(path.string() + ": accumulator split " + ck.model.main.split().to_string() +
                        " does not match config split " + ck.config.split.to_string());
    }
    if (ck.model.backbone.output_width() != ck.config.split.total_outputs()) {
      throw FormatError(path.string() + ": backbone output width does not match split");
    }
    return ck;
  } catch (const head::SnapshotError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": embedded config: " + e.what());
  } catch (const numgrad::ShapeError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ipnn::harness
