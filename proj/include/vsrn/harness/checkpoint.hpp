#pragma once

// Binary checkpoint: magic "VSRN", u32 version, length-prefixed config text,
// u32 epoch, f64 validation rsum, u32 parameter count, then per parameter a
// length-prefixed name, u32 rank, u32 dims and little-endian f64 values.
// A CRC-32 of all preceding bytes closes the file.

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/harness/binary_io.hpp"
#include "vsrn/harness/config.hpp"
#include "vsrn/harness/model.hpp"

namespace vsrn {

inline constexpr char kCheckpointMagic[4] = {'V', 'S', 'R', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ParamArray {
  Shape shape;
  std::vector<double> values;

  bool operator==(const ParamArray&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_text;
  std::uint32_t epoch = 0;
  double val_rsum = 0.0;
  std::vector<std::pair<std::string, ParamArray>> params;

  const ParamArray* find(std::string_view name) const {
    for (const auto& [n, a] : params)
      if (n == name) return &a;
    return nullptr;
  }
};

// Bitwise comparison, so NaN payloads and signed zeros count.
inline bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.version != b.version || a.config_text != b.config_text || a.epoch != b.epoch ||
      std::bit_cast<std::uint64_t>(a.val_rsum) != std::bit_cast<std::uint64_t>(b.val_rsum) ||
      a.params.size() != b.params.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const auto& [na, pa] = a.params[i];
    const auto& [nb, pb] = b.params[i];
    if (na != nb || pa.shape != pb.shape || pa.values.size() != pb.values.size()) return false;
    for (std::size_t j = 0; j < pa.values.size(); ++j) {
      if (std::bit_cast<std::uint64_t>(pa.values[j]) != std::bit_cast<std::uint64_t>(pb.values[j])) {
        return false;
      }
    }
  }
  return true;
}

inline Checkpoint snapshot(const VsrnModel& model, const TrainConfig& config, std::uint32_t epoch,
                           double val_rsum) {
  Checkpoint ckpt;
  ckpt.config_text = to_text(config);
  ckpt.epoch = epoch;
  ckpt.val_rsum = val_rsum;
  for (const auto& nt : model.named_parameters()) {
    ckpt.params.push_back(
        {nt.name, {nt.tensor.shape(), {nt.tensor.values().begin(), nt.tensor.values().end()}}});
  }
  return ckpt;
}

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u32(ckpt.version);
  w.str(ckpt.config_text);
  w.u32(ckpt.epoch);
  w.f64(ckpt.val_rsum);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, array] : ckpt.params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(array.shape.size()));
    for (std::size_t d : array.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : array.values) w.f64(v);
  }
  w.seal();
  return w.bytes();
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kCheckpointMagic, 4)) {
    throw FormatError("checkpoint: bad magic");
  }
  if (io::ByteReader(bytes.substr(4, 4)).u32() != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version");
  }
  io::ByteReader r(io::checked_payload(bytes));
  r.take(4);
  Checkpoint ckpt;
  ckpt.version = r.u32();
  ckpt.config_text = r.str();
  ckpt.epoch = r.u32();
  ckpt.val_rsum = r.f64();
  const std::uint32_t n = r.u32();
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    if (!seen.insert(name).second) throw CorruptionError("checkpoint: duplicate parameter " + name);
    ParamArray array;
    const std::uint32_t rank = r.u32();
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      array.shape.push_back(r.u32());
      count *= array.shape.back();
    }
    if (count > r.remaining() / 8) throw CorruptionError("checkpoint: parameter exceeds file");
    array.values.resize(count);
    for (double& v : array.values) v = r.f64();
    ckpt.params.emplace_back(std::move(name), std::move(array));
  }
  if (r.remaining() != 0) throw CorruptionError("checkpoint: trailing bytes");
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(io::read_file(path));
}

struct RestoredModel {
  TrainConfig config;
  VsrnModel model;
};

// Rebuilds the model described by a checkpoint. Every model parameter must
// appear exactly once with a matching shape.
inline RestoredModel restore(const Checkpoint& ckpt) {
  RestoredModel out;
  out.config = parse_config(ckpt.config_text);
  const ParamArray* wf = ckpt.find("image.w_f");
  const ParamArray* emb = ckpt.find("text.embedding");
  if (!wf || !emb || wf->shape.size() != 2 || emb->shape.size() != 2) {
    throw FormatError("checkpoint: missing image.w_f or text.embedding");
  }
  out.config.feature_dim = wf->shape[0];
  out.config.joint_dim = wf->shape[1];
  out.config.word_dim = emb->shape[1];
  out.model = VsrnModel::init(model_shape(out.config, wf->shape[0], emb->shape[0]), 0);
  const auto named = out.model.named_parameters();
  if (named.size() != ckpt.params.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(named.size()) + " parameters, found " +
                      std::to_string(ckpt.params.size()));
  }
  for (auto nt : named) {
    const ParamArray* array = ckpt.find(nt.name);
    if (!array) throw FormatError("checkpoint: missing parameter " + nt.name);
    if (array->shape != nt.tensor.shape()) {
      throw FormatError("checkpoint: shape mismatch for " + nt.name);
    }
    std::copy(array->values.begin(), array->values.end(), nt.tensor.mutable_values().begin());
  }
  return out;
}

}  // namespace vsrn
