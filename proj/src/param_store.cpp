// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/param_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "json.hpp"

#include "gswa/errors.hpp"
#include "gswa/io_util.hpp"

namespace gswa {

void ParamStore::set(const std::string& name, Tensor value) {
  if (name.empty()) throw ConfigError("parameter name must not be empty");
  tensors_.insert_or_assign(name, std::move(value));
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [k, v] : tensors_) out.push_back(k);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = tensors_.lower_bound(prefix); it != tensors_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

void ParamStore::expect_shape(const std::string& name, const Shape& shape) const {
  const Tensor& t = get(name);
  if (t.shape() != shape) {
    throw ConfigError("parameter '" + name + "' has shape " + shape_str(t.shape()) +
                      ", configuration needs " + shape_str(shape));
  }
}

void ParamStore::save(const std::filesystem::path& manifest) const {
  std::filesystem::path blob_path = manifest;
  blob_path.replace_extension(".bin");

  nlohmann::ordered_json doc;
  doc["format"] = kFormat;
  doc["blob"] = blob_path.filename().string();
  doc["tensors"] = nlohmann::ordered_json::array();

  std::string blob;
  for (const auto& [name, t] : tensors_) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = blob.size();
    doc["tensors"].push_back(entry);
    for (float v : t.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
  }
  doc["bytes"] = blob.size();
  write_file_atomic(blob_path, blob);
  write_file_atomic(manifest, doc.dump(2) + "\n");
}

ParamStore ParamStore::load(const std::filesystem::path& manifest) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("parameter manifest " + manifest.string() + " is not valid JSON: " + e.what());
  }
  ParamStore store;
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw FormatError("unsupported parameter format '" + doc.at("format").get<std::string>() + "'");
    }
    const auto blob_path = manifest.parent_path() / doc.at("blob").get<std::string>();
    const std::string blob = read_file(blob_path);
    if (doc.at("bytes").get<std::size_t>() != blob.size()) {
      throw FormatError("parameter blob " + blob_path.string() + " has " + std::to_string(blob.size()) +
                        " bytes, manifest declares " + std::to_string(doc.at("bytes").get<std::size_t>()));
    }
    std::size_t expected_offset = 0;
    std::string previous;
    // A wrong shape on one tensor shows up as a wrong offset on the next, so
    // errors name both neighbours.
    auto after = [&] { return previous.empty() ? std::string() : " (after tensor '" + previous + "')"; };
    for (const auto& entry : doc.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      if (shape.empty() || std::find(shape.begin(), shape.end(), 0) != shape.end()) {
        throw FormatError("tensor '" + name + "' has an invalid shape " + shape_str(shape));
      }
      const std::size_t bytes = shape_numel(shape) * 4;
      if (offset != expected_offset || offset + bytes > blob.size()) {
        throw FormatError("tensor '" + name + "' shape " + shape_str(shape) + " / offset " +
                          std::to_string(offset) + " does not match the blob layout" + after());
      }
      std::vector<float> data(shape_numel(shape));
      for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
          bits |= std::uint32_t(static_cast<unsigned char>(blob[offset + 4 * i + b])) << (8 * b);
        data[i] = std::bit_cast<float>(bits);
      }
      Tensor t(shape, std::move(data));
      if (!t.all_finite()) throw FormatError("tensor '" + name + "' contains non-finite values");
      store.set(name, std::move(t));
      expected_offset += bytes;
      previous = name;
    }
    if (expected_offset != blob.size()) {
      throw FormatError("parameter blob has " + std::to_string(blob.size() - expected_offset) +
                        " trailing bytes not described by the manifest" + after());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("parameter manifest " + manifest.string() + " is malformed: " + e.what());
  }
  return store;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// std distributions are implementation-defined; draw from the raw engine so
// parameters are identical across standard libraries.
class Stream {
 public:
  Stream(std::uint64_t seed, const std::string& name) {
    const std::uint64_t h = fnv1a(name);
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(h),
                      std::uint32_t(h >> 32)};
    engine_.seed(seq);
  }

  double unit() { return double(engine_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

Tensor SeededInit::uniform(const std::string& name, const Shape& shape, double lo, double hi) const {
  Stream s(seed_, name);
  Tensor t(shape);
  for (auto& v : t.data()) v = static_cast<float>(lo + (hi - lo) * s.unit());
  return t;
}

Tensor SeededInit::linear(const std::string& name, const Shape& shape, std::size_t fan_in) const {
  const double bound = 1.0 / std::sqrt(double(fan_in));
  return uniform(name, shape, -bound, bound);
}

Tensor SeededInit::normal(const std::string& name, const Shape& shape, double stddev) const {
  Stream s(seed_, name);
  Tensor t(shape);
  for (auto& v : t.data()) v = static_cast<float>(stddev * s.gaussian());
  return t;
}

}  // namespace gswa
