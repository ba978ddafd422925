// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "gswa/kernels.hpp"
#include "gswa/param_store.hpp"

namespace gswa {

inline constexpr std::size_t kFfnExpansion = 4;

/// Registers a pre-norm transformer block under `prefix`:
///   ln1.{g,b}, attn.{q,k,v,o}, ln2.{g,b}, ffn.fc1.{w,b}, ffn.fc2.{w,b}
void init_transformer_block(ParamStore& store, const SeededInit& init, const std::string& prefix,
                            std::size_t dim);

/// Registers a bias-carrying linear layer `prefix.w` [in x out] and `prefix.b` [out].
void init_linear(ParamStore& store, const SeededInit& init, const std::string& prefix, std::size_t in,
                 std::size_t out);

void expect_transformer_block(const ParamStore& store, const std::string& prefix, std::size_t dim);

kernels::AttentionParams<float> attention_params(const ParamStore& store, const std::string& prefix);

/// x + MHA(LN1(x)), then h + FFN(LN2(h)); untraced.
Tensor transformer_block(const Tensor& x, const ParamStore& store, const std::string& prefix,
                         std::size_t heads);

}  // namespace gswa
