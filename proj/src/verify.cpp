// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gswa/allocator_trace.hpp"
#include "gswa/errors.hpp"
#include "gswa/gradcheck.hpp"

namespace gswa {

namespace {

BlockLayout layout_for(std::size_t n_tiles) {
  BlockLayout layout;
  for (std::size_t i = 0; i < n_tiles; ++i) layout.tile_ids.push_back(i);
  layout.has_thumbnail = n_tiles > 1;
  return layout;
}

std::size_t grid_side(std::size_t tokens_per_image) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(tokens_per_image - 1))));
  return side * side == tokens_per_image - 1 ? side : 0;
}

}  // namespace

ShuffledEmbeddingSet random_shuffled_set(std::uint64_t seed, std::size_t n_tiles, std::size_t tokens_per_image,
                                         std::size_t width) {
  if (n_tiles == 0 || tokens_per_image < 2) throw ConfigError("random set needs tiles and patch tokens");
  BlockLayout layout = layout_for(n_tiles);
  const SeededInit init(seed);
  Tensor tokens = init.normal("random_set", {layout.blocks(), tokens_per_image, width}, 1.0);
  return {std::move(tokens), grid_side(tokens_per_image), std::move(layout)};
}

ShuffledEmbeddingSet identical_shuffled_set(std::uint64_t seed, std::size_t n_tiles, std::size_t tokens_per_image,
                                            std::size_t width) {
  ShuffledEmbeddingSet e = random_shuffled_set(seed, n_tiles, tokens_per_image, width);
  const std::size_t per = tokens_per_image * width;
  for (std::size_t b = 1; b < e.images(); ++b)
    std::copy(e.tokens.data().begin(), e.tokens.data().begin() + per, e.tokens.data().begin() + b * per);
  return e;
}

EmbeddingSet random_embedding_set(std::uint64_t seed, std::size_t n_tiles, std::size_t grid, std::size_t dim) {
  if (grid == 0 || grid % 2 != 0) throw ConfigError("embedding grid side must be positive and even");
  BlockLayout layout = layout_for(n_tiles);
  const SeededInit init(seed);
  Tensor tokens = init.normal("random_embedding", {layout.blocks(), grid * grid + 1, dim}, 1.0);
  return {std::move(tokens), grid, std::move(layout)};
}

double GradientCheck::max_rel_error() const {
  double m = 0.0;
  for (const auto& [name, e] : rel_error) m = std::max(m, e);
  return m;
}

bool GradientCheck::all_nonzero() const {
  return std::all_of(grad_norm.begin(), grad_norm.end(), [](const auto& kv) { return kv.second > 0.0; });
}

GradientCheck check_gradients(const ShuffledEmbeddingSet& e, const ParamStore& params, const GswaConfig& cfg,
                              double step) {
  if (!cfg.uses_attention()) throw ConfigError("the cosine strategy has no parameters to check");
  const auto names = gswa_param_names(cfg);
  expect_gswa_params(params, cfg, e.dim());

  Tape<float> tape;
  trace::BoundParams<float> bound(tape, params, names, true);
  tape.backward(trace::weighted_sum_loss(tape, bound, e, cfg));

  GradientCheck out;
  for (const auto& name : names) {
    const Tensor analytic = tape.grad(bound[name]);
    auto loss_at = [&](const TensorD& x) {
      Tape<double> t(false);
      trace::BoundParams<double> p(t, params, names, false);
      p.rebind(t, name, x, false);
      return t.value(trace::weighted_sum_loss(t, p, e, cfg))[0];
    };
    const TensorD numeric = finite_diff_grad<double>(loss_at, params.get(name).cast<double>(), step);
    out.rel_error[name] = relative_error(analytic, numeric);
    double n = 0.0;
    for (float g : analytic.data()) n += double(g) * double(g);
    out.grad_norm[name] = std::sqrt(n);
  }
  return out;
}

namespace {

constexpr double kSimplexTol = 1e-6;
constexpr double kGradTol = 1e-3;

const Strategy kStrategies[] = {Strategy::kSelfAttn, Strategy::kCrossAttn, Strategy::kCosineSimilarity};

GswaConfig small_gswa(Strategy s) {
  GswaConfig cfg;
  cfg.dim = 16;
  cfg.blocks = 2;
  cfg.heads = 2;
  cfg.strategy = s;
  return cfg;
}

double simplex_violation(const WeightVector& w) {
  double total = 0.0, worst = 0.0;
  for (float v : w.w) {
    total += double(v);
    if (v < 0.0f) worst = std::max(worst, -double(v));
    if (v > 1.0f) worst = std::max(worst, double(v) - 1.0);
  }
  return std::max(worst, std::abs(total - 1.0));
}

}  // namespace

std::vector<CheckResult> verify_gradients(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  for (Strategy s : {Strategy::kSelfAttn, Strategy::kCrossAttn}) {
    const GswaConfig cfg = small_gswa(s);
    double worst = 0.0;
    bool nonzero = true;
    std::string worst_name;
    for (std::size_t i = 0; i < opt.gradient_seeds; ++i) {
      const std::uint64_t seed = opt.seed + i;
      const auto e = random_shuffled_set(seed, 3, 5, 8);
      ParamStore params;
      init_gswa_params(params, SeededInit(seed), cfg, e.dim());
      const GradientCheck g = check_gradients(e, params, cfg);
      nonzero = nonzero && g.all_nonzero();
      for (const auto& [name, err] : g.rel_error) {
        if (err >= worst) {
          worst = err;
          worst_name = name;
        }
      }
    }
    out.push_back({"gradients/" + to_string(s), worst < kGradTol && nonzero, worst, kGradTol,
                   nonzero ? "worst tensor " + worst_name : "a parameter received a zero gradient"});
  }
  return out;
}

std::vector<CheckResult> verify_simplex(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  for (Strategy s : kStrategies) {
    const GswaConfig cfg = small_gswa(s);
    double worst = 0.0, worst_sym = 0.0;
    for (std::size_t i = 0; i < opt.simplex_seeds; ++i) {
      const std::uint64_t seed = opt.seed + i;
      for (std::size_t n : {1, 3, 6, 8}) {
        ParamStore params;
        init_gswa_params(params, SeededInit(seed), cfg, 8);
        worst = std::max(worst, simplex_violation(allocate_weights(random_shuffled_set(seed, n, 5, 8), params, cfg)));
        const WeightVector sym = allocate_weights(identical_shuffled_set(seed, n, 5, 8), params, cfg);
        for (float v : sym.w) worst_sym = std::max(worst_sym, std::abs(double(v) - 1.0 / double(sym.size())));
      }
    }
    out.push_back({"simplex/" + to_string(s), worst < kSimplexTol, worst, kSimplexTol, "sum and range of weights"});
    out.push_back({"symmetry/" + to_string(s), worst_sym < kSimplexTol, worst_sym, kSimplexTol,
                   "identical blocks give uniform weights"});
  }
  return out;
}

std::vector<CheckResult> verify_shuffle(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < opt.shuffle_grids; ++i) {
    const std::size_t grid = 2 * (1 + rng() % 4), dim = 1 + rng() % 6, n = 1 + rng() % 4;
    const EmbeddingSet e = random_embedding_set(opt.seed + i, n, grid, dim);
    const ShuffledEmbeddingSet s = pixel_shuffle(e);
    const bool shape_ok = s.tokens.shape() == Shape{e.images(), grid * grid / 4 + 1, 4 * dim};
    std::vector<float> patches_in, patches_out;
    for (std::size_t b = 0; b < e.images(); ++b) {
      const auto r = e.tokens.row(b);
      patches_in.insert(patches_in.end(), r.begin() + dim, r.end());
      const auto q = s.tokens.row(b);
      patches_out.insert(patches_out.end(), q.begin() + 4 * dim, q.end());
    }
    std::sort(patches_in.begin(), patches_in.end());
    std::sort(patches_out.begin(), patches_out.end());
    const EmbeddingSet back = pixel_unshuffle(s);
    if (!shape_ok || patches_in != patches_out || !(back.tokens == e.tokens)) ++failures;
  }
  return {{"shuffle/inversion", failures == 0, double(failures), 0.0,
           std::to_string(opt.shuffle_grids) + " random grids"}};
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> more) { out.insert(out.end(), more.begin(), more.end()); };
  if (suite == "all" || suite == "gradients") append(verify_gradients(opt));
  if (suite == "all" || suite == "simplex") append(verify_simplex(opt));
  if (suite == "all" || suite == "shuffle") append(verify_shuffle(opt));
  if (out.empty()) throw ConfigError("unknown verify suite '" + suite + "' (expected all, gradients, simplex or shuffle)");
  return out;
}

nlohmann::ordered_json verify_summary(const std::vector<CheckResult>& checks) {
  nlohmann::ordered_json j;
  j["schema"] = "gswa-verify/1";
  j["passed"] = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json o;
    o["name"] = c.name;
    o["pass"] = c.pass;
    o["value"] = c.value;
    o["tolerance"] = c.tolerance;
    o["detail"] = c.detail;
    arr.push_back(std::move(o));
  }
  j["checks"] = std::move(arr);
  return j;
}

}  // namespace gswa
