// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gswa/tensor.hpp"

namespace gswa {

/// Named float tensors shared by the encoder, allocator and projector.
///
/// On disk a store is a JSON manifest plus one blob of little-endian float32
/// values. The manifest lists tensors in name order with their shape and
/// byte offset into the blob; offsets are contiguous, so any mismatch between
/// manifest and blob is detected on load.
class ParamStore {
 public:
  static constexpr const char* kFormat = "gswa-params/1";

  void set(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  /// Throws ConfigError unless `name` exists with exactly `shape`.
  void expect_shape(const std::string& name, const Shape& shape) const;

  /// Writes `manifest` and a sibling blob named like it with a .bin extension.
  void save(const std::filesystem::path& manifest) const;
  static ParamStore load(const std::filesystem::path& manifest);

  friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.tensors_ == b.tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
};

/// Deterministic per-tensor random streams. Each tensor draws from its own
/// generator keyed by (seed, name), so initialisation does not depend on the
/// order in which tensors are created.
class SeededInit {
 public:
  explicit SeededInit(std::uint64_t seed) : seed_(seed) {}

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor linear(const std::string& name, const Shape& shape, std::size_t fan_in) const;
  Tensor normal(const std::string& name, const Shape& shape, double stddev) const;
  Tensor uniform(const std::string& name, const Shape& shape, double lo, double hi) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace gswa
