// Copyright 2026 The CGBC Authors
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


#include "cgbc/embedding_store.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "cgbc/error.hpp"
#include "json.hpp"

namespace cgbc {
namespace {

constexpr std::string_view kManifestSuffix = ".manifest.json";

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kClass: return "class";
    case Role::kPrompt: return "prompt";
    case Role::kImage: return "image";
    case Role::kConcept: return "concept";
  }
  return "unknown";
}

Role role_from_string(std::string_view s) {
  if (s == "class") return Role::kClass;
  if (s == "prompt") return Role::kPrompt;
  if (s == "image") return Role::kImage;
  if (s == "concept") return Role::kConcept;
  throw DataError("unknown container role '" + std::string(s) + "'");
}

EmbeddingContainer::EmbeddingContainer(Role role, std::size_t dim,
                                       std::vector<std::string> names,
                                       std::vector<float> rows, bool normalized)
    : role_(role), dim_(dim), names_(std::move(names)), rows_(std::move(rows)),
      normalized_(normalized) {
  if (dim_ == 0) throw DataError("embedding dimension must be >= 1");
  if (rows_.size() != names_.size() * dim_) {
    throw DataError("container holds " + std::to_string(rows_.size()) + " values, expected " +
                    std::to_string(names_.size()) + " x " + std::to_string(dim_));
  }
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw DataError("duplicate container name '" + names_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    double sq = 0.0;
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in row " + std::to_string(i) + " ('" + names_[i] + "')");
      }
      sq += static_cast<double>(v) * v;
    }
    if (normalized_ && std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
      throw DataError("row " + std::to_string(i) + " has norm " + std::to_string(std::sqrt(sq)) +
                      " but container is flagged normalized");
    }
  }
}

std::span<const float> EmbeddingContainer::row(std::size_t i) const {
  if (i >= count()) throw std::out_of_range("container row index out of range");
  return std::span<const float>(rows_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> EmbeddingContainer::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingContainer load_container(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  try {
    if (m.at("version").get<int>() != 1) throw DataError("unsupported manifest version");
    if (m.at("dtype").get<std::string>() != "f32le") {
      throw DataError("unsupported dtype '" + m.at("dtype").get<std::string>() + "'");
    }
    const auto dim = m.at("dim").get<std::int64_t>();
    const auto count = m.at("count").get<std::int64_t>();
    if (dim < 1 || count < 0) throw DataError("manifest has invalid dim/count");
    auto names = m.at("names").get<std::vector<std::string>>();
    if (static_cast<std::int64_t>(names.size()) != count) {
      throw DataError("manifest lists " + std::to_string(names.size()) + " names but count is " +
                      std::to_string(count));
    }
    const Role role = role_from_string(m.at("role").get<std::string>());
    const bool normalized = m.at("normalized").get<bool>();
    const auto data_path = path.parent_path() / m.at("data").get<std::string>();

    std::ifstream din(data_path, std::ios::binary);
    if (!din) throw DataError("cannot open data file " + data_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(din)), std::istreambuf_iterator<char>());
    const auto expected = static_cast<std::size_t>(count) * static_cast<std::size_t>(dim) * 4;
    if (bytes.size() != expected) {
      throw DataError("data file " + data_path.string() + " holds " + std::to_string(bytes.size()) +
                      " bytes, manifest implies " + std::to_string(expected));
    }
    std::vector<float> rows(expected / 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + 4 * i, 4);
      rows[i] = std::bit_cast<float>(to_le(raw));
    }
    return EmbeddingContainer(role, static_cast<std::size_t>(dim), std::move(names),
                              std::move(rows), normalized);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + " schema error: " + e.what());
  }
}

std::filesystem::path save_container(const EmbeddingContainer& c,
                                     const std::filesystem::path& path) {
  std::string file = path.filename().string();
  std::string stem = ends_with(file, kManifestSuffix)
                         ? file.substr(0, file.size() - kManifestSuffix.size())
                         : file;
  if (stem.empty()) throw std::invalid_argument("empty container name in " + path.string());
  const auto dir = path.parent_path();
  const auto manifest_path = dir / (stem + std::string(kManifestSuffix));
  const std::string data_name = stem + ".f32";

  // Re-check the row invariants; the container type already guarantees them.
  for (float v : c.data()) {
    if (!std::isfinite(v)) throw DataError("refusing to write non-finite container");
  }

  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream dout(dir / data_name, std::ios::binary | std::ios::trunc);
  if (!dout) throw DataError("cannot write " + (dir / data_name).string());
  for (float v : c.data()) {
    const std::uint32_t raw = to_le(std::bit_cast<std::uint32_t>(v));
    dout.write(reinterpret_cast<const char*>(&raw), 4);
  }
  if (!dout) throw DataError("write failed for " + (dir / data_name).string());

  nlohmann::ordered_json m;
  m["version"] = 1;
  m["dim"] = c.dim();
  m["count"] = c.count();
  m["role"] = std::string(to_string(c.role()));
  m["normalized"] = c.normalized();
  m["dtype"] = "f32le";
  m["names"] = c.names();
  m["data"] = data_name;
  std::ofstream mout(manifest_path, std::ios::trunc);
  if (!mout) throw DataError("cannot write " + manifest_path.string());
  mout << m.dump(2) << '\n';
  if (!mout) throw DataError("write failed for " + manifest_path.string());
  return manifest_path;
}

EmbeddingContainer l2_normalize(const EmbeddingContainer& c) {
  std::vector<float> rows(c.data().begin(), c.data().end());
  for (std::size_t i = 0; i < c.count(); ++i) {
    auto r = std::span<float>(rows).subspan(i * c.dim(), c.dim());
    double sq = 0.0;
    for (float v : r) sq += static_cast<double>(v) * v;
    if (sq == 0.0) {
      throw DataError("cannot normalize zero-norm row " + std::to_string(i) + " ('" +
                      c.names()[i] + "')");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : r) v = static_cast<float>(v * inv);
  }
  return EmbeddingContainer(c.role(), c.dim(), c.names(), std::move(rows), true);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * b[k];
  return s;
}

SimilarityMatrix cosine_sim(const EmbeddingContainer& a, const EmbeddingContainer& b) {
  if (a.dim() != b.dim()) {
    throw DataError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
  if (!a.normalized() || !b.normalized()) {
    throw DataError("cosine_sim requires normalized containers");
  }
  SimilarityMatrix out{a.count(), b.count(), std::vector<float>(a.count() * b.count())};
  for (std::size_t i = 0; i < a.count(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.count(); ++j) {
      out.values[i * out.cols + j] = static_cast<float>(dot(ai, b.row(j)));
    }
  }
  return out;
}

double sim_to_prob(double s) {
  // Float round-off puts self-similarities a few ulps above 1; only larger
  // excursions are worth a log line.
  if (std::abs(s) > 1.0 + 1e-5) spdlog::warn("similarity {} outside [-1, 1]; clamping", s);
  s = std::clamp(s, -1.0, 1.0);
  return (s + 1.0) / 2.0;
}

}  // namespace cgbc
