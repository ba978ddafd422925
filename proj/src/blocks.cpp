// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/blocks.hpp"

namespace gswa {

void init_linear(ParamStore& store, const SeededInit& init, const std::string& prefix, std::size_t in,
                 std::size_t out) {
  store.set(prefix + ".w", init.linear(prefix + ".w", {in, out}, in));
  store.set(prefix + ".b", init.linear(prefix + ".b", {out}, in));
}

void init_transformer_block(ParamStore& store, const SeededInit& init, const std::string& prefix,
                            std::size_t dim) {
  for (const char* ln : {".ln1", ".ln2"}) {
    store.set(prefix + ln + ".g", Tensor({dim}, 1.0f));
    store.set(prefix + ln + ".b", Tensor({dim}, 0.0f));
  }
  for (const char* m : {".attn.q", ".attn.k", ".attn.v", ".attn.o"}) {
    store.set(prefix + m, init.linear(prefix + m, {dim, dim}, dim));
  }
  init_linear(store, init, prefix + ".ffn.fc1", dim, kFfnExpansion * dim);
  init_linear(store, init, prefix + ".ffn.fc2", kFfnExpansion * dim, dim);
}

void expect_transformer_block(const ParamStore& store, const std::string& prefix, std::size_t dim) {
  const std::size_t hidden = kFfnExpansion * dim;
  for (const char* ln : {".ln1", ".ln2"}) {
    store.expect_shape(prefix + ln + ".g", {dim});
    store.expect_shape(prefix + ln + ".b", {dim});
  }
  for (const char* m : {".attn.q", ".attn.k", ".attn.v", ".attn.o"}) store.expect_shape(prefix + m, {dim, dim});
  store.expect_shape(prefix + ".ffn.fc1.w", {dim, hidden});
  store.expect_shape(prefix + ".ffn.fc1.b", {hidden});
  store.expect_shape(prefix + ".ffn.fc2.w", {hidden, dim});
  store.expect_shape(prefix + ".ffn.fc2.b", {dim});
}

kernels::AttentionParams<float> attention_params(const ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".attn.q"), store.get(prefix + ".attn.k"), store.get(prefix + ".attn.v"),
          store.get(prefix + ".attn.o")};
}

Tensor transformer_block(const Tensor& x, const ParamStore& store, const std::string& prefix,
                         std::size_t heads) {
  using namespace kernels;
  const Tensor n1 = layer_norm(x, store.get(prefix + ".ln1.g"), store.get(prefix + ".ln1.b"));
  const Tensor h = add(x, multi_head_attention(n1, attention_params(store, prefix), heads).output);
  const Tensor n2 = layer_norm(h, store.get(prefix + ".ln2.g"), store.get(prefix + ".ln2.b"));
  Tensor f = gelu(add_bias(matmul(n2, store.get(prefix + ".ffn.fc1.w")), store.get(prefix + ".ffn.fc1.b")));
  f = add_bias(matmul(f, store.get(prefix + ".ffn.fc2.w")), store.get(prefix + ".ffn.fc2.b"));
  return add(h, f);
}

}  // namespace gswa
