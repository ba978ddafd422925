// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gswa/encoder.hpp"
#include "gswa/param_store.hpp"
#include "gswa/tensor.hpp"

namespace gswa {

enum class Strategy { kSelfAttn, kCrossAttn, kCosineSimilarity };

std::string to_string(Strategy s);
/// Accepts "self-attn", "cross-attn", "cosine-similarity"; ConfigError otherwise.
Strategy parse_strategy(const std::string& name);

struct GswaConfig {
  std::size_t dim = 1024;  // D_g
  std::size_t blocks = 4;
  std::size_t heads = 4;
  Strategy strategy = Strategy::kSelfAttn;

  bool uses_attention() const { return strategy != Strategy::kCosineSimilarity; }
  void validate() const;
};

/// Per-image rows ordered tiles first, global last.
struct ClsMatrix {
  Tensor rows;  // [images, width]
};

/// One non-negative weight per image, global last; sums to one.
struct WeightVector {
  std::vector<float> w;

  std::size_t size() const { return w.size(); }
  float global() const { return w.back(); }
  bool on_simplex(double tol = 1e-6) const;
};

/// Patch tokens scaled by their image weight, cls removed: [images, M/4, 4D].
struct WeightedEmbeddings {
  Tensor tokens;
  BlockLayout layout;
};

struct GswaResult {
  WeightedEmbeddings embeddings;
  WeightVector weights;
};

/// Registers gswa.proj.{w,b}, gswa.block<i>.* and gswa.weight_attn.{q,k}.
void init_gswa_params(ParamStore& store, const SeededInit& init, const GswaConfig& cfg, std::size_t cls_width);
void expect_gswa_params(const ParamStore& store, const GswaConfig& cfg, std::size_t cls_width);

/// Names of every tensor the attention strategies read, in store order.
std::vector<std::string> gswa_param_names(const GswaConfig& cfg);

ClsMatrix project_cls(const Tensor& cls_rows, const ParamStore& params);
ClsMatrix contextualize(const ClsMatrix& m, const ParamStore& params, const GswaConfig& cfg);
WeightVector extract_weights(const ClsMatrix& m, const ParamStore& params, const GswaConfig& cfg);

/// Softmax over cosine similarities between every cls row and the last (global) row.
WeightVector cosine_weights(const Tensor& cls_rows);

/// Patch tokens of every image with cls dropped: [images, M/4, 4D].
Tensor patch_tokens(const ShuffledEmbeddingSet& e);

WeightedEmbeddings apply_weights(const ShuffledEmbeddingSet& e, const WeightVector& w);

/// Weights for the configured strategy, without applying them.
WeightVector allocate_weights(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg);

GswaResult gswa_forward(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg);

}  // namespace gswa
