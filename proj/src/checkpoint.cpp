// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "omvae/error.hpp"

namespace omvae {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix_u64(std::uint64_t& h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xFF;
    h *= kFnvPrime;
  }
}

std::vector<double> to_vector(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

Matrix matrix_from_json(const json& values, std::size_t rows, std::size_t cols, std::string_view what) {
  if (!values.is_array() || values.size() != rows * cols) {
    throw ValidationError(fmt::format("checkpoint: {} must be an array of {} numbers", what, rows * cols));
  }
  std::vector<double> data;
  data.reserve(values.size());
  for (const json& v : values) {
    if (!v.is_number()) throw ValidationError(fmt::format("checkpoint: {} holds a non-number", what));
    data.push_back(v.get<double>());
  }
  return Matrix(rows, cols, std::move(data));
}

// Masks the model would be built with for these dims.
std::vector<Matrix> expected_masks(const MaskPair& masks, std::size_t tasks, std::size_t hidden) {
  MultiTaskVae reference(masks, tasks, hidden);
  std::vector<Matrix> out;
  for (const MaskedLinear& layer : reference.layers()) out.push_back(layer.mask());
  return out;
}

}  // namespace

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return fmt::format("{:016x}", h);
}

std::string mask_digest(const Matrix& mask) {
  std::uint64_t h = kFnvOffset;
  fnv_mix_u64(h, mask.rows());
  fnv_mix_u64(h, mask.cols());
  for (double v : mask.data()) fnv_mix_u64(h, std::bit_cast<std::uint64_t>(v));
  return fmt::format("fnv1a64:{:016x}", h);
}

std::string checkpoint_to_json(const MultiTaskVae& model, std::string_view config_digest) {
  const ModelDims& d = model.dims();
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["config_digest"] = std::string(config_digest);
  doc["dims"] = {{"sites", d.sites}, {"genes", d.genes}, {"pathways", d.pathways},
                 {"tasks", d.tasks}, {"hidden", d.hidden}};
  json layers = json::array();
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const MaskedLinear& layer = model.layers()[i];
    layers.push_back({{"name", MultiTaskVae::layer_name(i)},
                      {"rows", layer.in_features()},
                      {"cols", layer.out_features()},
                      {"weight", to_vector(layer.weight())},
                      {"bias", to_vector(layer.bias())},
                      {"mask_digest", mask_digest(layer.mask())}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

MultiTaskVae checkpoint_from_json(std::string_view text, const MaskPair& masks) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("checkpoint is not valid JSON: {}", e.what()));
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ValidationError(fmt::format("unsupported checkpoint format_version {}", version));
    }
    const json& dims = doc.at("dims");
    const auto sites = dims.at("sites").get<std::size_t>();
    const auto genes = dims.at("genes").get<std::size_t>();
    const auto pathways = dims.at("pathways").get<std::size_t>();
    const auto tasks = dims.at("tasks").get<std::size_t>();
    const auto hidden = dims.at("hidden").get<std::size_t>();
    const std::vector<Matrix> expected = expected_masks(masks, tasks, hidden);
    const json& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != expected.size()) {
      throw ValidationError(fmt::format("checkpoint has {} layers, expected {}", layers.size(), expected.size()));
    }
    std::vector<MaskedLinear> built;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const json& entry = layers[i];
      const std::string name = entry.at("name").get<std::string>();
      if (name != MultiTaskVae::layer_name(i)) {
        throw ValidationError(fmt::format("checkpoint layer {} is '{}', expected '{}'", i, name,
                                          MultiTaskVae::layer_name(i)));
      }
      const std::string digest = entry.at("mask_digest").get<std::string>();
      const std::string want = mask_digest(expected[i]);
      if (digest != want) {
        throw ValidationError(fmt::format(
            "mask digest mismatch for layer '{}': checkpoint has {}, supplied masks give {}", name, digest, want));
      }
      const auto rows = entry.at("rows").get<std::size_t>();
      const auto cols = entry.at("cols").get<std::size_t>();
      if (rows != expected[i].rows() || cols != expected[i].cols()) {
        throw ValidationError(fmt::format("checkpoint layer '{}' is {}x{}, expected {}", name, rows, cols,
                                          expected[i].shape_string()));
      }
      built.emplace_back(matrix_from_json(entry.at("weight"), rows, cols, name + ".weight"),
                         matrix_from_json(entry.at("bias"), 1, cols, name + ".bias"), expected[i]);
    }
    MultiTaskVae model = MultiTaskVae::from_layers(std::move(built));
    if (!(model.dims() == ModelDims{sites, genes, pathways, tasks, hidden})) {
      throw ValidationError("checkpoint dims disagree with its layers");
    }
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void save_checkpoint(const std::filesystem::path& path, const MultiTaskVae& model,
                     std::string_view config_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out << checkpoint_to_json(model, config_digest);
  if (!out) throw Error(fmt::format("failed writing checkpoint '{}'", path.string()));
}

MultiTaskVae load_checkpoint(const std::filesystem::path& path, const MaskPair& masks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read checkpoint '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str(), masks);
}

}  // namespace omvae
