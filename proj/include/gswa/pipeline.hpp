// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gswa/allocator.hpp"
#include "gswa/encoder.hpp"
#include "gswa/image.hpp"
#include "gswa/param_store.hpp"
#include "gswa/tiler.hpp"

#include "json.hpp"

namespace gswa {

inline constexpr const char* kReportSchema = "gswa-report/1";
inline constexpr const char* kComparisonSchema = "gswa-ablation/1";

/// Every knob of one end-to-end run. `seed` drives parameter initialisation.
struct PipelineConfig {
  CropOptions crop;
  EncoderConfig encoder;
  GswaConfig gswa;
  std::size_t proj_dim = 256;  // D_t
  std::uint64_t seed = 42;

  std::size_t cls_width() const { return 4 * encoder.dim; }
  void validate() const;
};

/// Flat key/value form, e.g. {"tile_size":448,...,"strategy":"self-attn","seed":42}.
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
/// Overlays keys present in `doc` onto `base`; unknown keys are a ConfigError.
PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {});

void init_projector_params(ParamStore& store, const SeededInit& init, std::size_t in, std::size_t out);

/// Seeded parameters for the encoder, allocator and projector of `cfg`.
ParamStore init_params(const PipelineConfig& cfg);
/// Throws ConfigError if `store` lacks a tensor `cfg` needs or has the wrong shape.
void expect_params(const ParamStore& store, const PipelineConfig& cfg);

/// Two affine layers with GELU between, applied to every token: [images, M/4, D_t].
Tensor project_tokens(const Tensor& tokens, const ParamStore& params);

struct RankedTile {
  std::size_t block = 0;    // position in the embedding set
  std::size_t tile_id = 0;  // index in the crop plan
  double score = 0.0;
};

/// Cosine similarity of each tile cls to the global cls, descending, ties by
/// ascending tile index. When the set has no thumbnail its single tile is
/// the global image and scores 1.
std::vector<RankedTile> rank_by_global_similarity(const ShuffledEmbeddingSet& e);

/// Same ordering rule with the tile weights as scores.
std::vector<RankedTile> rank_by_weight(const ShuffledEmbeddingSet& e, const WeightVector& w);

enum class RemovalSetting { kNone, kTop, kSecondTop, kBottom };
enum class RankBy { kSimilarity, kWeight };

std::string to_string(RemovalSetting s);
std::string to_string(RankBy r);
RemovalSetting parse_removal_setting(const std::string& name);
RankBy parse_rank_by(const std::string& name);

struct Removal {
  RemovalSetting setting = RemovalSetting::kNone;
  std::size_t k = 0;
};

/// Plan indices of the tiles a setting removes given a ranking: ranks 1..k
/// (top), k+1..2k (second-top) or the last k (bottom). RangeError when the
/// request exceeds the available tiles.
std::vector<std::size_t> select_removed(const std::vector<RankedTile>& ranking, const Removal& removal);

/// Drops the tile blocks named in `tile_ids`; survivors and the thumbnail keep their order.
ShuffledEmbeddingSet drop_tiles(const ShuffledEmbeddingSet& e, const std::vector<std::size_t>& tile_ids);

/// Ranks by global similarity, then drops the tiles the setting selects.
ShuffledEmbeddingSet remove_tiles(const ShuffledEmbeddingSet& e, RemovalSetting setting, std::size_t k);

struct TokenCounts {
  std::size_t per_image_encoded = 0;  // M+1
  std::size_t encoded = 0;
  std::size_t shuffled = 0;
  std::size_t after_removal = 0;
  std::size_t weighted = 0;
  std::size_t projected = 0;
};

struct TileEntry {
  std::size_t index = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double similarity = 0.0;
  double weight = 0.0;
  bool removed = false;
};

struct AnalysisReport {
  PipelineConfig config;
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  CropPlan plan;
  std::vector<TileEntry> tiles;
  std::vector<float> weights;  // WeightVector of the (possibly reduced) run
  TokenCounts tokens;
  Removal removal;
  RankBy rank_by = RankBy::kSimilarity;
  std::vector<std::size_t> removed;
};

nlohmann::ordered_json report_to_json(const AnalysisReport& report);

/// Crop, encode and shuffle; the part shared by every removal setting.
struct PreparedImage {
  std::size_t width = 0;
  std::size_t height = 0;
  TileBatch batch;
  ShuffledEmbeddingSet shuffled;
  std::size_t encoded_tokens = 0;
  std::size_t per_image_tokens = 0;
};

PreparedImage prepare_image(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params);

struct PipelineResult {
  Tensor projected;  // [images, M/4, D_t]
  WeightedEmbeddings weighted;
  WeightVector weights;
  AnalysisReport report;
};

/// Removal (if any) happens before weighting, then GSWA and the projector run
/// on the survivors.
PipelineResult run_prepared(const PreparedImage& prepared, const PipelineConfig& cfg, const ParamStore& params,
                            const Removal& removal = {}, RankBy rank_by = RankBy::kSimilarity);

PipelineResult run_pipeline(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params,
                            const Removal& removal = {}, RankBy rank_by = RankBy::kSimilarity);

struct ComparisonEntry {
  Removal removal;
  std::vector<std::size_t> removed;
  std::vector<std::size_t> survivors;
  double removed_mass = 0.0;  // baseline weight of the removed tiles
  std::size_t tokens_before = 0;
  std::size_t tokens_after = 0;
  double output_norm = 0.0;
  double output_norm_delta = 0.0;
  AnalysisReport report;
};

struct Comparison {
  PipelineResult baseline;
  RankBy rank_by = RankBy::kSimilarity;
  std::vector<ComparisonEntry> entries;
};

/// Runs the baseline and every removal setting on one image.
Comparison compare_settings(const ImageTensor& image, const PipelineConfig& cfg, const ParamStore& params,
                            const std::vector<Removal>& settings, RankBy rank_by = RankBy::kSimilarity);

nlohmann::ordered_json comparison_to_json(const Comparison& c);

double frobenius_norm(const Tensor& t);

/// Canvas with a red overlay per tile; opacity maps min(w) -> 0.1 and
/// max(w) -> 0.7 linearly (0.4 everywhere when all weights are equal).
ImageTensor render_heatmap(const ImageTensor& canvas, const CropPlan& plan, const std::vector<double>& tile_weights);

/// `v` rounded to 9 significant digits, so JSON output is stable across runs.
double round9(double v);

}  // namespace gswa
