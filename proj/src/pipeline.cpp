// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "gswa/blocks.hpp"
#include "gswa/errors.hpp"
#include "gswa/kernels.hpp"

namespace gswa {

using nlohmann::ordered_json;

void PipelineConfig::validate() const {
  if (crop.tile_size != encoder.tile_size) {
    throw ConfigError("crop tile size " + std::to_string(crop.tile_size) + " differs from encoder tile size " +
                      std::to_string(encoder.tile_size));
  }
  if (crop.min_tiles < 1 || crop.max_tiles < crop.min_tiles) {
    throw ConfigError("tile bounds must satisfy 1 <= min_tiles <= max_tiles");
  }
  if (proj_dim == 0) throw ConfigError("projector width must be positive");
  encoder.validate();
  gswa.validate();
}

ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["tile_size"] = cfg.crop.tile_size;
  j["min_tiles"] = cfg.crop.min_tiles;
  j["max_tiles"] = cfg.crop.max_tiles;
  j["patch_size"] = cfg.encoder.patch_size;
  j["depth"] = cfg.encoder.depth;
  j["dim"] = cfg.encoder.dim;
  j["heads"] = cfg.encoder.heads;
  j["gswa_dim"] = cfg.gswa.dim;
  j["gswa_blocks"] = cfg.gswa.blocks;
  j["gswa_heads"] = cfg.gswa.heads;
  j["strategy"] = to_string(cfg.gswa.strategy);
  j["proj_dim"] = cfg.proj_dim;
  j["seed"] = cfg.seed;
  return j;
}

namespace {

std::size_t as_size(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    if (key == "tile_size") {
      base.crop.tile_size = base.encoder.tile_size = as_size(v, key);
    } else if (key == "min_tiles") {
      base.crop.min_tiles = int(as_size(v, key));
    } else if (key == "max_tiles") {
      base.crop.max_tiles = int(as_size(v, key));
    } else if (key == "patch_size") {
      base.encoder.patch_size = as_size(v, key);
    } else if (key == "depth") {
      base.encoder.depth = as_size(v, key);
    } else if (key == "dim") {
      base.encoder.dim = as_size(v, key);
    } else if (key == "heads") {
      base.encoder.heads = as_size(v, key);
    } else if (key == "gswa_dim") {
      base.gswa.dim = as_size(v, key);
    } else if (key == "gswa_blocks") {
      base.gswa.blocks = as_size(v, key);
    } else if (key == "gswa_heads") {
      base.gswa.heads = as_size(v, key);
    } else if (key == "strategy") {
      if (!v.is_string()) throw ConfigError("config key 'strategy' must be a string");
      base.gswa.strategy = parse_strategy(v.get<std::string>());
    } else if (key == "proj_dim") {
      base.proj_dim = as_size(v, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
      base.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return base;
}

void init_projector_params(ParamStore& store, const SeededInit& init, std::size_t in, std::size_t out) {
  init_linear(store, init, "proj.fc1", in, out);
  init_linear(store, init, "proj.fc2", out, out);
}

ParamStore init_params(const PipelineConfig& cfg) {
  cfg.validate();
  ParamStore store;
  const SeededInit init(cfg.seed);
  init_encoder_params(store, init, cfg.encoder);
  if (cfg.gswa.uses_attention()) init_gswa_params(store, init, cfg.gswa, cfg.cls_width());
  init_projector_params(store, init, cfg.cls_width(), cfg.proj_dim);
  return store;
}

void expect_params(const ParamStore& store, const PipelineConfig& cfg) {
  cfg.validate();
  expect_encoder_params(store, cfg.encoder);
  if (cfg.gswa.uses_attention()) expect_gswa_params(store, cfg.gswa, cfg.cls_width());
  store.expect_shape("proj.fc1.w", {cfg.cls_width(), cfg.proj_dim});
  store.expect_shape("proj.fc1.b", {cfg.proj_dim});
  store.expect_shape("proj.fc2.w", {cfg.proj_dim, cfg.proj_dim});
  store.expect_shape("proj.fc2.b", {cfg.proj_dim});
}

Tensor project_tokens(const Tensor& tokens, const ParamStore& params) {
  kernels::require_rank(tokens, 3, "project_tokens");
  const std::size_t images = tokens.dim(0), m = tokens.dim(1), d = tokens.dim(2);
  const Tensor flat = tokens.reshaped({images * m, d});
  const Tensor h = kernels::gelu(kernels::add_bias(kernels::matmul(flat, params.get("proj.fc1.w")),
                                                   params.get("proj.fc1.b")));
  const Tensor out = kernels::add_bias(kernels::matmul(h, params.get("proj.fc2.w")), params.get("proj.fc2.b"));
  return out.reshaped({images, m, out.dim(1)});
}

namespace {

void sort_ranking(std::vector<RankedTile>& r) {
  std::sort(r.begin(), r.end(), [](const RankedTile& a, const RankedTile& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tile_id < b.tile_id;
  });
}

/// Number of blocks that hold plan tiles (the thumbnail is excluded).
std::size_t tile_blocks(const BlockLayout& layout) { return layout.tile_ids.size(); }

}  // namespace

std::vector<RankedTile> rank_by_global_similarity(const ShuffledEmbeddingSet& e) {
  const auto& layout = e.layout;
  if (tile_blocks(layout) == 0) throw ContractError("ranking needs at least one tile");
  const Tensor global = cls_of(e, layout.global_index());
  double gg = 0.0;
  for (float v : global.data()) gg += double(v) * double(v);
  std::vector<RankedTile> out;
  for (std::size_t b = 0; b < tile_blocks(layout); ++b) {
    RankedTile r{b, layout.tile_ids[b], 1.0};
    if (layout.has_thumbnail) {
      const Tensor c = cls_of(e, b);
      double dot = 0.0, cc = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        dot += double(c[j]) * double(global[j]);
        cc += double(c[j]) * double(c[j]);
      }
      if (cc == 0.0 || gg == 0.0) throw NumericError("cosine similarity of a zero cls vector");
      r.score = std::clamp(dot / std::sqrt(cc * gg), -1.0, 1.0);
    }
    out.push_back(r);
  }
  sort_ranking(out);
  return out;
}

std::vector<RankedTile> rank_by_weight(const ShuffledEmbeddingSet& e, const WeightVector& w) {
  if (w.size() != e.images()) throw DimensionError("weight vector does not match the embedding set");
  std::vector<RankedTile> out;
  for (std::size_t b = 0; b < tile_blocks(e.layout); ++b) out.push_back({b, e.layout.tile_ids[b], double(w.w[b])});
  sort_ranking(out);
  return out;
}

std::string to_string(RemovalSetting s) {
  switch (s) {
    case RemovalSetting::kNone:
      return "none";
    case RemovalSetting::kTop:
      return "top";
    case RemovalSetting::kSecondTop:
      return "second-top";
    case RemovalSetting::kBottom:
      return "bottom";
  }
  return "none";
}

std::string to_string(RankBy r) { return r == RankBy::kWeight ? "weight" : "similarity"; }

RemovalSetting parse_removal_setting(const std::string& name) {
  if (name == "none") return RemovalSetting::kNone;
  if (name == "top") return RemovalSetting::kTop;
  if (name == "second-top") return RemovalSetting::kSecondTop;
  if (name == "bottom") return RemovalSetting::kBottom;
  throw ConfigError("unknown removal setting '" + name + "' (expected top, second-top or bottom)");
}

RankBy parse_rank_by(const std::string& name) {
  if (name == "similarity") return RankBy::kSimilarity;
  if (name == "weight") return RankBy::kWeight;
  throw ConfigError("unknown ranking '" + name + "' (expected similarity or weight)");
}

std::vector<std::size_t> select_removed(const std::vector<RankedTile>& ranking, const Removal& removal) {
  const std::size_t n = ranking.size(), k = removal.k;
  if (removal.setting == RemovalSetting::kNone || k == 0) return {};
  const std::size_t needed = removal.setting == RemovalSetting::kSecondTop ? 2 * k : k;
  if (needed > n) {
    throw RangeError("cannot remove " + to_string(removal.setting) + " " + std::to_string(k) + " of " +
                     std::to_string(n) + " tiles");
  }
  std::size_t first = 0;
  if (removal.setting == RemovalSetting::kSecondTop) first = k;
  if (removal.setting == RemovalSetting::kBottom) first = n - k;
  std::vector<std::size_t> ids;
  for (std::size_t i = first; i < first + k; ++i) ids.push_back(ranking[i].tile_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ShuffledEmbeddingSet drop_tiles(const ShuffledEmbeddingSet& e, const std::vector<std::size_t>& tile_ids) {
  if (tile_ids.empty()) return e;
  const std::set<std::size_t> drop(tile_ids.begin(), tile_ids.end());
  if (!e.layout.has_thumbnail) throw RangeError("the global image cannot be removed");
  std::vector<std::size_t> keep_blocks;
  BlockLayout layout;
  layout.has_thumbnail = true;
  for (std::size_t b = 0; b < e.layout.tile_ids.size(); ++b) {
    if (drop.count(e.layout.tile_ids[b])) continue;
    keep_blocks.push_back(b);
    layout.tile_ids.push_back(e.layout.tile_ids[b]);
  }
  if (e.layout.tile_ids.size() - layout.tile_ids.size() != drop.size()) {
    throw RangeError("removal names a tile that is not in the embedding set");
  }
  keep_blocks.push_back(e.layout.global_index());
  const std::size_t per = e.tokens_per_image() * e.dim();
  Tensor tokens({keep_blocks.size(), e.tokens_per_image(), e.dim()});
  for (std::size_t i = 0; i < keep_blocks.size(); ++i) {
    const auto src = e.tokens.data().begin() + keep_blocks[i] * per;
    std::copy(src, src + per, tokens.data().begin() + i * per);
  }
  return {std::move(tokens), e.grid, std::move(layout)};
}

ShuffledEmbeddingSet remove_tiles(const ShuffledEmbeddingSet& e, RemovalSetting setting, std::size_t k) {
  return drop_tiles(e, select_removed(rank_by_global_similarity(e), {setting, k}));
}

double round9(double v) {
  if (!std::isfinite(v)) throw NumericError("cannot serialise a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

ordered_json report_to_json(const AnalysisReport& r) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["seed"] = r.config.seed;
  j["strategy"] = to_string(r.config.gswa.strategy);
  j["config"] = config_to_json(r.config);
  j["image"] = {{"width", r.image_width}, {"height", r.image_height}};
  j["plan"] = {{"ratio", {r.plan.ratio.cols, r.plan.ratio.rows}},
               {"canvas", {r.plan.canvas_width, r.plan.canvas_height}},
               {"thumbnail", r.plan.include_thumbnail}};
  j["n_tiles"] = r.plan.tile_count();
  ordered_json tiles = ordered_json::array();
  for (const auto& t : r.tiles) {
    ordered_json e;
    e["index"] = t.index;
    e["row"] = t.row;
    e["col"] = t.col;
    e["similarity"] = round9(t.similarity);
    e["weight"] = round9(t.weight);
    e["removed"] = t.removed;
    tiles.push_back(std::move(e));
  }
  j["tiles"] = std::move(tiles);
  ordered_json weights = ordered_json::array();
  for (float w : r.weights) weights.push_back(round9(w));
  j["weights"] = std::move(weights);
  j["global_weight"] = round9(r.weights.back());
  j["tokens"] = {{"per_image_encoded", r.tokens.per_image_encoded}, {"encoded", r.tokens.encoded},
                 {"shuffled", r.tokens.shuffled},                   {"after_removal", r.tokens.after_removal},
                 {"weighted", r.tokens.weighted},                   {"projected", r.tokens.projected}};
  j["removal"] = {{"setting", to_string(r.removal.setting)},
                  {"k", r.removal.k},
                  {"rank_by", to_string(r.rank_by)},
                  {"removed", r.removed}};
  return j;
}

PreparedImage prepare_image(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params) {
  expect_params(params, cfg);
  TileBatch batch = crop(image, cfg.crop);
  const EmbeddingSet e = encode(batch, cfg.encoder, params);
  const std::size_t per_image = e.tokens.dim(1);
  return {image.width(), image.height(), std::move(batch), pixel_shuffle(e), e.images() * per_image, per_image};
}

PipelineResult run_prepared(const PreparedImage& prepared, const PipelineConfig& cfg, const ParamStore& params,
                            const Removal& removal, RankBy rank_by) {
  const ShuffledEmbeddingSet& full = prepared.shuffled;
  const auto similarity = rank_by_global_similarity(full);

  std::vector<std::size_t> removed;
  if (removal.setting != RemovalSetting::kNone && removal.k > 0) {
    if (!full.layout.has_thumbnail) throw RangeError("a single-tile image has no removable tiles");
    const auto ranking =
        rank_by == RankBy::kWeight ? rank_by_weight(full, allocate_weights(full, params, cfg.gswa)) : similarity;
    removed = select_removed(ranking, removal);
  }
  const ShuffledEmbeddingSet reduced = drop_tiles(full, removed);
  GswaResult g = gswa_forward(reduced, params, cfg.gswa);
  Tensor projected = project_tokens(g.embeddings.tokens, params);

  AnalysisReport report;
  report.config = cfg;
  report.image_width = prepared.width;
  report.image_height = prepared.height;
  report.plan = prepared.batch.plan;
  report.removal = removal;
  report.rank_by = rank_by;
  report.removed = removed;
  report.weights = g.weights.w;

  std::vector<double> sim_of(report.plan.tile_count(), 0.0);
  for (const auto& r : similarity) sim_of[r.tile_id] = r.score;
  std::vector<double> weight_of(report.plan.tile_count(), 0.0);
  std::vector<bool> removed_flag(report.plan.tile_count(), false);
  for (std::size_t b = 0; b < reduced.layout.tile_ids.size(); ++b) weight_of[reduced.layout.tile_ids[b]] = g.weights.w[b];
  for (std::size_t id : removed) removed_flag[id] = true;
  for (std::size_t i = 0; i < report.plan.tile_count(); ++i) {
    report.tiles.push_back(
        {i, report.plan.row_of(i), report.plan.col_of(i), sim_of[i], weight_of[i], bool(removed_flag[i])});
  }

  report.tokens.per_image_encoded = prepared.per_image_tokens;
  report.tokens.encoded = prepared.encoded_tokens;
  report.tokens.shuffled = full.images() * full.tokens_per_image();
  report.tokens.after_removal = reduced.images() * reduced.tokens_per_image();
  report.tokens.weighted = g.embeddings.tokens.dim(0) * g.embeddings.tokens.dim(1);
  report.tokens.projected = projected.dim(0) * projected.dim(1);

  return {std::move(projected), std::move(g.embeddings), std::move(g.weights), std::move(report)};
}

PipelineResult run_pipeline(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params,
                            const Removal& removal, RankBy rank_by) {
  return run_prepared(prepare_image(image, cfg, params), cfg, params, removal, rank_by);
}

double frobenius_norm(const Tensor& t) {
  double s = 0.0;
  for (float v : t.data()) s += double(v) * double(v);
  return std::sqrt(s);
}

Comparison compare_settings(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params,
                            const std::vector<Removal>& settings, RankBy rank_by) {
  const PreparedImage prepared = prepare_image(image, cfg, params);
  Comparison c{run_prepared(prepared, cfg, params), rank_by, {}};
  const double base_norm = frobenius_norm(c.baseline.projected);
  const auto& base_layout = prepared.shuffled.layout;
  for (const Removal& removal : settings) {
    PipelineResult r = run_prepared(prepared, cfg, params, removal, rank_by);
    ComparisonEntry e;
    e.removal = removal;
    e.removed = r.report.removed;
    for (const auto& t : r.report.tiles)
      if (!t.removed) e.survivors.push_back(t.index);
    for (std::size_t b = 0; b < base_layout.tile_ids.size(); ++b) {
      if (std::binary_search(e.removed.begin(), e.removed.end(), base_layout.tile_ids[b])) {
        e.removed_mass += double(c.baseline.weights.w[b]);
      }
    }
    e.tokens_before = r.report.tokens.shuffled;
    e.tokens_after = r.report.tokens.after_removal;
    e.output_norm = frobenius_norm(r.projected);
    e.output_norm_delta = e.output_norm - base_norm;
    e.report = std::move(r.report);
    c.entries.push_back(std::move(e));
  }
  return c;
}

ordered_json comparison_to_json(const Comparison& c) {
  ordered_json j;
  j["schema"] = kComparisonSchema;
  j["seed"] = c.baseline.report.config.seed;
  j["strategy"] = to_string(c.baseline.report.config.gswa.strategy);
  j["rank_by"] = to_string(c.rank_by);
  j["baseline"] = {{"output_norm", round9(frobenius_norm(c.baseline.projected))},
                   {"report", report_to_json(c.baseline.report)}};
  ordered_json entries = ordered_json::array();
  for (const auto& e : c.entries) {
    ordered_json o;
    o["setting"] = to_string(e.removal.setting);
    o["k"] = e.removal.k;
    o["removed"] = e.removed;
    o["survivors"] = e.survivors;
    o["removed_mass"] = round9(e.removed_mass);
    o["tokens_before"] = e.tokens_before;
    o["tokens_after"] = e.tokens_after;
    o["output_norm"] = round9(e.output_norm);
    o["output_norm_delta"] = round9(e.output_norm_delta);
    o["report"] = report_to_json(e.report);
    entries.push_back(std::move(o));
  }
  j["settings"] = std::move(entries);
  return j;
}

ImageTensor render_heatmap(const ImageTensor& canvas, const CropPlan& plan, const std::vector<double>& tile_weights) {
  if (tile_weights.size() != plan.tile_count()) {
    throw DimensionError("heatmap needs one weight per tile, got " + std::to_string(tile_weights.size()) + " for " +
                         std::to_string(plan.tile_count()));
  }
  if (canvas.width() != plan.canvas_width || canvas.height() != plan.canvas_height) {
    throw DimensionError("heatmap canvas does not match the crop plan");
  }
  const auto [lo, hi] = std::minmax_element(tile_weights.begin(), tile_weights.end());
  std::vector<float> data = canvas.data();
  for (std::size_t t = 0; t < plan.tile_count(); ++t) {
    const double alpha = *hi == *lo ? 0.4 : 0.1 + 0.6 * (tile_weights[t] - *lo) / (*hi - *lo);
    const TileRect& r = plan.tiles[t];
    for (std::size_t y = r.y; y < r.y + r.h; ++y) {
      for (std::size_t x = r.x; x < r.x + r.w; ++x) {
        float* px = data.data() + (y * canvas.width() + x) * ImageTensor::kChannels;
        px[0] = float(std::min(1.0, (1.0 - alpha) * px[0] + alpha));
        px[1] = float((1.0 - alpha) * px[1]);
        px[2] = float((1.0 - alpha) * px[2]);
      }
    }
  }
  return ImageTensor(canvas.height(), canvas.width(), std::move(data));
}

}  // namespace gswa
