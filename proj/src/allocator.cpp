// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/allocator.hpp"

#include <algorithm>
#include <cmath>

#include "gswa/allocator_trace.hpp"
#include "gswa/blocks.hpp"
#include "gswa/errors.hpp"

namespace gswa {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kSelfAttn:
      return "self-attn";
    case Strategy::kCrossAttn:
      return "cross-attn";
    case Strategy::kCosineSimilarity:
      return "cosine-similarity";
  }
  throw ConfigError("unknown strategy");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "self-attn") return Strategy::kSelfAttn;
  if (name == "cross-attn") return Strategy::kCrossAttn;
  if (name == "cosine-similarity") return Strategy::kCosineSimilarity;
  throw ConfigError("unknown strategy '" + name + "' (expected self-attn, cross-attn or cosine-similarity)");
}

void GswaConfig::validate() const {
  if (dim < 2) throw ConfigError("GSWA width must be at least 2");
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("GSWA width " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (uses_attention() && blocks == 0) throw ConfigError("attention strategies need at least one block");
}

bool WeightVector::on_simplex(double tol) const {
  if (w.empty()) return false;
  double total = 0.0;
  for (float v : w) {
    if (!(v >= 0.0f && v <= 1.0f)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

void init_gswa_params(ParamStore& store, const SeededInit& init, const GswaConfig& cfg, std::size_t cls_width) {
  cfg.validate();
  init_linear(store, init, "gswa.proj", cls_width, cfg.dim);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    init_transformer_block(store, init, "gswa.block" + std::to_string(b), cfg.dim);
  }
  for (const char* n : {"gswa.weight_attn.q", "gswa.weight_attn.k"}) {
    store.set(n, init.linear(n, {cfg.dim, cfg.dim}, cfg.dim));
  }
}

void expect_gswa_params(const ParamStore& store, const GswaConfig& cfg, std::size_t cls_width) {
  cfg.validate();
  store.expect_shape("gswa.proj.w", {cls_width, cfg.dim});
  store.expect_shape("gswa.proj.b", {cfg.dim});
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    expect_transformer_block(store, "gswa.block" + std::to_string(b), cfg.dim);
  }
  store.expect_shape("gswa.weight_attn.q", {cfg.dim, cfg.dim});
  store.expect_shape("gswa.weight_attn.k", {cfg.dim, cfg.dim});
}

std::vector<std::string> gswa_param_names(const GswaConfig& cfg) {
  std::vector<std::string> names = {"gswa.proj.w", "gswa.proj.b"};
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "gswa.block" + std::to_string(b);
    for (const char* s : {".ln1.g", ".ln1.b", ".attn.q", ".attn.k", ".attn.v", ".attn.o", ".ln2.g", ".ln2.b",
                          ".ffn.fc1.w", ".ffn.fc1.b", ".ffn.fc2.w", ".ffn.fc2.b"}) {
      names.push_back(pre + s);
    }
  }
  names.push_back("gswa.weight_attn.q");
  names.push_back("gswa.weight_attn.k");
  return names;
}

namespace {

WeightVector to_weights(const Tensor& t) {
  return WeightVector{std::vector<float>(t.data().begin(), t.data().end())};
}

}  // namespace

ClsMatrix project_cls(const Tensor& cls_rows, const ParamStore& params) {
  const Tensor& w = params.get("gswa.proj.w");
  if (cls_rows.rank() != 2 || cls_rows.dim(1) != w.dim(0)) {
    throw ConfigError("cls width " + shape_str(cls_rows.shape()) + " does not match projection " +
                      shape_str(w.shape()));
  }
  Tape<float> tape(false);
  trace::BoundParams<float> p(tape, params, {"gswa.proj.w", "gswa.proj.b"}, false);
  return {tape.value(trace::project_cls(tape, p, tape.constant(cls_rows)))};
}

ClsMatrix contextualize(const ClsMatrix& m, const ParamStore& params, const GswaConfig& cfg) {
  cfg.validate();
  if (!cfg.uses_attention()) throw ConfigError("contextualize needs the self-attn or cross-attn strategy");
  Tape<float> tape(false);
  trace::BoundParams<float> p(tape, params, gswa_param_names(cfg), false);
  return {tape.value(trace::contextualize(tape, p, tape.constant(m.rows), cfg))};
}

WeightVector extract_weights(const ClsMatrix& m, const ParamStore& params, const GswaConfig& cfg) {
  cfg.validate();
  Tape<float> tape(false);
  trace::BoundParams<float> p(tape, params, {"gswa.weight_attn.q", "gswa.weight_attn.k"}, false);
  return to_weights(tape.value(trace::extract_weights(tape, p, tape.constant(m.rows), cfg)));
}

WeightVector cosine_weights(const Tensor& cls_rows) {
  kernels::require_rank(cls_rows, 2, "cosine_weights");
  const std::size_t n = cls_rows.dim(0);
  const auto global = cls_rows.row(n - 1);
  auto sq_norm = [](std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += double(x) * double(x);
    return s;
  };
  const double gn = sq_norm(global);
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = cls_rows.row(i);
    const double rn = sq_norm(r);
    if (rn == 0.0 || gn == 0.0) throw NumericError("cosine weights need non-zero cls vectors (row " + std::to_string(i) + ")");
    double dot = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) dot += double(r[j]) * double(global[j]);
    sims[i] = i == n - 1 ? 1.0 : std::clamp(dot / std::sqrt(rn * gn), -1.0, 1.0);
  }
  double mx = *std::max_element(sims.begin(), sims.end());
  double total = 0.0;
  for (double& s : sims) total += (s = std::exp(s - mx));
  WeightVector w;
  for (double s : sims) w.w.push_back(static_cast<float>(s / total));
  return w;
}

Tensor patch_tokens(const ShuffledEmbeddingSet& e) {
  const std::size_t n = e.images(), m = e.patch_tokens(), d = e.dim();
  if (m == 0) throw DimensionError("embedding set has no patch tokens");
  Tensor out({n, m, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = e.tokens.data().begin() + (i * (m + 1) + 1) * d;
    std::copy(src, src + m * d, out.data().begin() + i * m * d);
  }
  return out;
}

WeightedEmbeddings apply_weights(const ShuffledEmbeddingSet& e, const WeightVector& w) {
  if (w.size() != e.images()) {
    throw DimensionError("weight vector has " + std::to_string(w.size()) + " entries for " +
                         std::to_string(e.images()) + " images");
  }
  Tensor out = patch_tokens(e);
  const std::size_t block = out.size() / out.dim(0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < block; ++j) out[i * block + j] = w.w[i] * out[i * block + j];
  return {std::move(out), e.layout};
}

WeightVector allocate_weights(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg) {
  cfg.validate();
  const Tensor cls = cls_matrix(e);
  if (!cfg.uses_attention()) return cosine_weights(cls);
  expect_gswa_params(params, cfg, cls.dim(1));
  Tape<float> tape(false);
  trace::BoundParams<float> p(tape, params, gswa_param_names(cfg), false);
  return to_weights(tape.value(trace::gswa_weights(tape, p, tape.constant(cls), cfg)));
}

GswaResult gswa_forward(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg) {
  WeightVector w = allocate_weights(e, params, cfg);
  return {apply_weights(e, w), std::move(w)};
}

}  // namespace gswa
