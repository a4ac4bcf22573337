// Copyright 2026 The relex Authors.
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

// Model file container.
//
//   offset  size  content
//   0       8     magic "RELEXFCN"
//   8       4     format version, uint32 little-endian (currently 1)
//   12      8     header length H, uint64 little-endian
//   20      H     JSON header (UTF-8): labels, shapes, feature config,
//                 feature layout and the ordered tensor table
//   20+H    ...   tensors in header order, IEEE-754 binary64
//                 little-endian, column-major
//
// Tensor names are layer<i>.<field>; the output layer has no bn_* tensors.

#ifndef RELEX_FCNN_IO_HPP_
#define RELEX_FCNN_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "relex/error.hpp"
#include "relex/fcnn.hpp"
#include "relex/features.hpp"

namespace relex::fcnn {

inline constexpr char kModelMagic[8] = {'R', 'E', 'L', 'E', 'X', 'F', 'C', 'N'};

namespace detail_io {

using nlohmann::json;

template <typename Ptr>
struct TensorRef {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Ptr data;
};

// Every tensor of the model in file order; pointers are const iff the model is.
template <typename Model>
auto tensors(Model& m) {
  using Ptr = std::conditional_t<std::is_const_v<Model>, const double*, double*>;
  std::vector<TensorRef<Ptr>> out;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& p = m.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    out.push_back({prefix + "weights", p.weights.rows(), p.weights.cols(), p.weights.data()});
    out.push_back({prefix + "bias", p.bias.size(), 1, p.bias.data()});
    if (p.has_batch_norm()) {
      out.push_back({prefix + "bn_gamma", p.bn_gamma.size(), 1, p.bn_gamma.data()});
      out.push_back({prefix + "bn_beta", p.bn_beta.size(), 1, p.bn_beta.data()});
      out.push_back({prefix + "bn_running_mean", p.bn_running_mean.size(), 1, p.bn_running_mean.data()});
      out.push_back({prefix + "bn_running_var", p.bn_running_var.size(), 1, p.bn_running_var.data()});
    }
  }
  return out;
}

inline json feature_config_json(const features::FeatureConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"vicinity_window", c.vicinity_window},
          {"max_path_len", c.max_path_len},
          {"vicinity_mode", features::to_string(c.vicinity_mode)},
          {"distance_norm", c.distance_norm}};
}

inline features::FeatureConfig feature_config_from(const json& j) {
  features::FeatureConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.vicinity_window = j.at("vicinity_window").get<std::size_t>();
  c.max_path_len = j.at("max_path_len").get<std::size_t>();
  c.vicinity_mode = features::parse_vicinity_mode(j.at("vicinity_mode").get<std::string>());
  c.distance_norm = j.at("distance_norm").get<double>();
  return c;
}

inline json header_json(const FcnnModel& m) {
  json layout = json::array();
  for (const auto& s : features::describe_layout(m.feature_config))
    layout.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
  json table = json::array();
  for (const auto& t : tensors(m)) table.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  return {{"class_labels", m.class_labels},
          {"hidden_sizes", m.hidden_sizes},
          {"input_dim", m.input_dim()},
          {"leaky_slope", m.leaky_slope},
          {"feature_config", feature_config_json(m.feature_config)},
          {"layout_version", features::kLayoutVersion},
          {"layout", layout},
          {"tensors", table}};
}

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace detail_io

inline std::string serialize_model(const FcnnModel& model) {
  const std::string header = detail_io::header_json(model).dump();
  std::string out(kModelMagic, sizeof(kModelMagic));
  detail_io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kModelVersion));
  detail_io::put_le<std::uint64_t>(out, header.size());
  out += header;
  for (const auto& t : detail_io::tensors(model))
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i)
      detail_io::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t.data[i]));
  return out;
}

inline FcnnModel deserialize_model(const std::string& bytes) {
  using detail_io::json;
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw ParseError("not a model file (bad or missing magic)");
  const auto version = detail_io::get_le<std::uint32_t>(bytes, 8);
  if (version != static_cast<std::uint32_t>(kModelVersion))
    throw ParseError(detail::concat("unsupported model version ", version));
  const auto header_len = detail_io::get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - 20) throw ParseError("truncated model file (header)");

  json header;
  try {
    header = json::parse(bytes.substr(20, header_len));
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt model header: ") + e.what());
  }

  FcnnModel m;
  try {
    if (header.at("layout_version").get<int>() != features::kLayoutVersion)
      throw ParseError("unsupported feature layout version");
    m = make_model(header.at("input_dim").get<std::size_t>(),
                   header.at("hidden_sizes").get<std::vector<std::size_t>>(),
                   header.at("class_labels").get<std::vector<std::string>>(),
                   detail_io::feature_config_from(header.at("feature_config")),
                   header.at("leaky_slope").get<double>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt model header: ") + e.what());
  }
  if (m.input_dim() != features::feature_length(m.feature_config))
    throw ParseError("model input width does not match its feature config");

  auto refs = detail_io::tensors(m);
  const auto& table = header.at("tensors");
  if (table.size() != refs.size()) throw ParseError("model tensor table does not match its shape");
  std::size_t pos = 20 + header_len;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& t = refs[k];
    if (table[k].at("name") != t.name || table[k].at("rows").get<Eigen::Index>() != t.rows ||
        table[k].at("cols").get<Eigen::Index>() != t.cols)
      throw ParseError("model tensor table entry " + std::to_string(k) + " does not match " + t.name);
    const auto count = static_cast<std::size_t>(t.rows * t.cols);
    if (bytes.size() - pos < count * 8) throw ParseError("truncated model file (tensor " + t.name + ")");
    for (std::size_t i = 0; i < count; ++i, pos += 8)
      t.data[i] = std::bit_cast<double>(detail_io::get_le<std::uint64_t>(bytes, pos));
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes after model tensors");
  return m;
}

inline void save_model(const FcnnModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

inline FcnnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

// Human-readable dump of the header plus every tensor.
inline nlohmann::json export_model_json(const FcnnModel& model) {
  auto j = detail_io::header_json(model);
  j["format_version"] = kModelVersion;
  nlohmann::json values = nlohmann::json::object();
  for (const auto& t : detail_io::tensors(model)) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < t.rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < t.cols; ++c) row.push_back(t.data[c * t.rows + r]);
      rows.push_back(std::move(row));
    }
    values[t.name] = std::move(rows);
  }
  j["values"] = std::move(values);
  return j;
}

}  // namespace relex::fcnn

#endif  // RELEX_FCNN_IO_HPP_
