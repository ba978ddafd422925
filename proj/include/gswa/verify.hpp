// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Self-checks runnable from the command line: gradient agreement with finite
// differences, simplex and symmetry properties of the weights, and exact
// invertibility of the pixel shuffle.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gswa/allocator.hpp"
#include "gswa/encoder.hpp"
#include "gswa/param_store.hpp"

#include "json.hpp"

namespace gswa {

/// [blocks, tokens_per_image, width] embedding set filled with N(0, 1)
/// values. With n_tiles > 1 the last block plays the thumbnail.
ShuffledEmbeddingSet random_shuffled_set(std::uint64_t seed, std::size_t n_tiles, std::size_t tokens_per_image,
                                         std::size_t width);

/// Same as random_shuffled_set but every block is a copy of the first.
ShuffledEmbeddingSet identical_shuffled_set(std::uint64_t seed, std::size_t n_tiles, std::size_t tokens_per_image,
                                            std::size_t width);

/// Random pre-shuffle embeddings with grid side `grid`: [blocks, grid^2+1, dim].
EmbeddingSet random_embedding_set(std::uint64_t seed, std::size_t n_tiles, std::size_t grid, std::size_t dim);

struct GradientCheck {
  std::map<std::string, double> rel_error;  // per parameter tensor
  std::map<std::string, double> grad_norm;  // analytic gradient norm
  double max_rel_error() const;
  bool all_nonzero() const;
};

/// Gradient of sum_i w_i * sum(patch tokens of image i) with respect to every
/// GSWA parameter: tape backward in float against central differences of the
/// same graph evaluated in double.
GradientCheck check_gradients(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg,
                              double step = 1e-3);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed quantity
  double tolerance = 0.0;  // bound it was compared against
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 42;
  std::size_t gradient_seeds = 3;
  std::size_t simplex_seeds = 20;
  std::size_t shuffle_grids = 20;
};

std::vector<CheckResult> verify_gradients(const VerifyOptions& opt);
std::vector<CheckResult> verify_simplex(const VerifyOptions& opt);
std::vector<CheckResult> verify_shuffle(const VerifyOptions& opt);

/// Runs the named suite: all, gradients, simplex or shuffle.
std::vector<CheckResult> run_verify_suite(const std::string& suite, const VerifyOptions& opt);

nlohmann::ordered_json verify_summary(const std::vector<CheckResult>& checks);

}  // namespace gswa
