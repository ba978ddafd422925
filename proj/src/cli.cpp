// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include "gswa/cli.hpp"

#include <cstdlib>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gswa/errors.hpp"
#include "gswa/io_util.hpp"
#include "gswa/verify.hpp"

namespace gswa::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return kInputError;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DimensionError*>(&e)) return kConfigError;
  if (dynamic_cast<const RangeError*>(&e)) return kInfeasible;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kIoError;
  return kFailure;
}

namespace {

/// Values of the shared configuration flags; an option only overrides the
/// config file when it was given on the command line.
struct ConfigFlags {
  std::size_t tile_size = 0, max_tiles = 0, patch_size = 0, depth = 0, dim = 0;
  std::size_t gswa_dim = 0, gswa_blocks = 0, gswa_heads = 0, proj_dim = 0;
  std::uint64_t seed = 0;
  std::string strategy, config_file, params_file, out_dir = ".";
  std::size_t jobs = 1;
  bool emit_tiles = false;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app, bool pipeline_flags) {
    opts["tile-size"] = app->add_option("--tile-size", tile_size, "Tile side in pixels");
    opts["max-tiles"] = app->add_option("--max-tiles", max_tiles, "Largest tile count considered");
    opts["seed"] = app->add_option("--seed", seed, "Seed for parameter initialisation");
    opts["config"] = app->add_option("--config", config_file, "JSON file with configuration keys");
    opts["out"] = app->add_option("--out", out_dir, "Output directory");
    if (!pipeline_flags) return;
    opts["patch-size"] = app->add_option("--patch-size", patch_size, "Encoder patch size");
    opts["depth"] = app->add_option("--depth", depth, "Encoder depth");
    opts["dim"] = app->add_option("--dim", dim, "Encoder width");
    opts["gswa-dim"] = app->add_option("--gswa-dim", gswa_dim, "Allocator hidden width");
    opts["gswa-blocks"] = app->add_option("--gswa-blocks", gswa_blocks, "Allocator transformer blocks");
    opts["gswa-heads"] = app->add_option("--gswa-heads", gswa_heads, "Allocator attention heads");
    opts["strategy"] = app->add_option("--strategy", strategy, "self-attn, cross-attn or cosine-similarity");
    opts["proj-dim"] = app->add_option("--proj-dim", proj_dim, "Projector output width");
    opts["params"] = app->add_option("--params", params_file, "Parameter manifest to load");
    opts["jobs"] = app->add_option("--jobs", jobs, "Images processed in parallel");
  }

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  RunConfig resolve() const {
    RunConfig rc;
    PipelineConfig& p = rc.pipeline;
    if (const char* env = std::getenv("GSWA_SEED"); env && *env) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*end != '\0') throw ConfigError(std::string("GSWA_SEED is not an unsigned integer: ") + env);
      p.seed = v;
    }
    if (given("config")) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_file(config_file));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + config_file + ": " + e.what());
      } catch (const FormatError& e) {
        throw ConfigError(e.what());
      }
      p = config_from_json(doc, p);
    }
    if (given("tile-size")) p.crop.tile_size = p.encoder.tile_size = tile_size;
    if (given("max-tiles")) p.crop.max_tiles = int(max_tiles);
    if (given("patch-size")) p.encoder.patch_size = patch_size;
    if (given("depth")) p.encoder.depth = depth;
    if (given("dim")) p.encoder.dim = dim;
    if (given("gswa-dim")) p.gswa.dim = gswa_dim;
    if (given("gswa-blocks")) p.gswa.blocks = gswa_blocks;
    if (given("gswa-heads")) p.gswa.heads = gswa_heads;
    if (given("strategy")) p.gswa.strategy = parse_strategy(strategy);
    if (given("proj-dim")) p.proj_dim = proj_dim;
    if (given("seed")) p.seed = seed;
    if (given("params")) rc.params = params_file;
    if (jobs == 0) throw ConfigError("--jobs must be at least 1");
    rc.out = out_dir;
    rc.emit_tiles = emit_tiles;
    rc.jobs = jobs;
    return rc;
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const ordered_json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

ParamStore load_or_init(const RunConfig& rc) {
  if (!rc.params) return init_params(rc.pipeline);
  ParamStore store = ParamStore::load(*rc.params);
  expect_params(store, rc.pipeline);
  return store;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

int cmd_tile(const std::string& image_path, const RunConfig& rc, std::ostream& out) {
  rc.pipeline.validate();
  const ImageTensor image = load_image(image_path);
  const TileBatch batch = crop(image, rc.pipeline.crop);
  ensure_dir(rc.out);
  write_file_atomic(rc.out / "plan.json", plan_to_json(batch.plan) + "\n");
  if (rc.emit_tiles) {
    for (std::size_t i = 0; i < batch.tiles.size(); ++i) {
      save_png(batch.tiles[i], rc.out / ("tile_" + std::to_string(batch.plan.row_of(i)) + "_" +
                                         std::to_string(batch.plan.col_of(i)) + ".png"));
    }
    if (!batch.thumbnail.empty()) save_png(batch.thumbnail.front(), rc.out / "thumbnail.png");
  }
  out << "ratio " << batch.plan.ratio.cols << "x" << batch.plan.ratio.rows << ", " << batch.plan.tile_count()
      << " tiles" << (batch.plan.include_thumbnail ? " + thumbnail" : "") << ", canvas "
      << batch.plan.canvas_width << "x" << batch.plan.canvas_height << "\n";
  return kOk;
}

struct WeighOutput {
  std::string report;
  std::string heatmap;
  std::string listing;
};

WeighOutput weigh_one(const std::string& image_path, const RunConfig& rc, const ParamStore& params) {
  const ImageTensor image = load_image(image_path);
  const PreparedImage prepared = prepare_image(image, rc.pipeline, params);
  const PipelineResult r = run_prepared(prepared, rc.pipeline, params);
  std::vector<double> tile_weights;
  std::ostringstream listing;
  listing << image_path << "\n";
  for (const auto& t : r.report.tiles) {
    tile_weights.push_back(t.weight);
    listing << "  tile " << t.index << " (row " << t.row << ", col " << t.col << ")  weight "
            << fixed(t.weight, 6) << "  similarity " << fixed(t.similarity, 6) << "\n";
  }
  if (r.report.plan.include_thumbnail) listing << "  global weight " << fixed(r.weights.global(), 6) << "\n";
  const ImageTensor heat = render_heatmap(prepared.batch.canvas, r.report.plan, tile_weights);
  return {report_to_json(r.report).dump(2) + "\n", encode_png(heat), listing.str()};
}

int cmd_weigh(const std::vector<std::string>& images, const RunConfig& rc, std::ostream& out) {
  const ParamStore params = load_or_init(rc);
  ensure_dir(rc.out);
  std::vector<WeighOutput> results(images.size());
  for (std::size_t start = 0; start < images.size(); start += rc.jobs) {
    const std::size_t stop = std::min(images.size(), start + rc.jobs);
    std::vector<std::future<WeighOutput>> pending;
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(rc.jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&, i] { return weigh_one(images[i], rc, params); }));
    }
    for (std::size_t i = start; i < stop; ++i) results[i] = pending[i - start].get();
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string stem = fs::path(images[i]).stem().string();
    write_file_atomic(rc.out / (stem + ".report.json"), results[i].report);
    write_file_atomic(rc.out / (stem + ".heatmap.png"), results[i].heatmap);
    out << results[i].listing;
  }
  return kOk;
}

Removal parse_removal(const std::string& arg) {
  const auto colon = arg.find(':');
  if (colon == std::string::npos) throw ConfigError("--remove expects setting:k, got '" + arg + "'");
  const std::string k = arg.substr(colon + 1);
  if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("--remove count must be a non-negative integer, got '" + k + "'");
  }
  const RemovalSetting s = parse_removal_setting(arg.substr(0, colon));
  if (s == RemovalSetting::kNone) throw ConfigError("--remove expects top, second-top or bottom");
  return {s, std::size_t(std::stoul(k))};
}

int cmd_ablate(const std::string& image_path, const std::vector<std::string>& removals, const std::string& rank_by,
               const RunConfig& rc, std::ostream& out) {
  std::vector<Removal> settings;
  for (const auto& r : removals) settings.push_back(parse_removal(r));
  if (settings.empty()) {
    settings = {{RemovalSetting::kTop, 3}, {RemovalSetting::kSecondTop, 3}, {RemovalSetting::kBottom, 3}};
  }
  const RankBy by = parse_rank_by(rank_by);
  const ParamStore params = load_or_init(rc);
  const Comparison c = compare_settings(load_image(image_path), rc.pipeline, params, settings, by);
  ensure_dir(rc.out);
  write_json(rc.out / (fs::path(image_path).stem().string() + ".ablation.json"), comparison_to_json(c));
  out << "baseline  tokens " << c.baseline.report.tokens.shuffled << "  output norm "
      << fixed(frobenius_norm(c.baseline.projected), 6) << "\n";
  for (const auto& e : c.entries) {
    out << to_string(e.removal.setting) << ":" << e.removal.k << "  removed [";
    for (std::size_t i = 0; i < e.removed.size(); ++i) out << (i ? "," : "") << e.removed[i];
    out << "]  mass " << fixed(e.removed_mass, 6) << "  tokens " << e.tokens_before << " -> " << e.tokens_after
        << "  norm delta " << fixed(e.output_norm_delta, 6) << "\n";
  }
  return kOk;
}

// For init-params, --out names the manifest itself.
int cmd_init_params(const RunConfig& rc, std::ostream& out) {
  const ParamStore store = init_params(rc.pipeline);
  const fs::path& path = rc.out;
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  store.save(path);
  out << "wrote " << store.size() << " tensors to " << path.string() << "\n";
  return kOk;
}

int cmd_verify(const std::string& suite, const RunConfig& rc, std::ostream& out) {
  if (rc.params) {
    // A supplied store must at least load and fit the configuration.
    expect_params(ParamStore::load(*rc.params), rc.pipeline);
  }
  VerifyOptions opt;
  opt.seed = rc.pipeline.seed;
  const auto checks = run_verify_suite(suite, opt);
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << "  value " << c.value << "  tol " << c.tolerance << "  "
        << c.detail << "\n";
  }
  const ordered_json summary = verify_summary(checks);
  out << summary.dump() << "\n";
  return summary["passed"].get<bool>() ? kOk : kFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Global semantic-guided weight allocation over dynamically cropped images"};
  app.require_subcommand(1);

  ConfigFlags tile_flags, weigh_flags, ablate_flags, init_flags, verify_flags;
  std::string tile_image, ablate_image, rank_by = "similarity", suite = "all";
  std::vector<std::string> weigh_images, removals;

  auto* tile = app.add_subcommand("tile", "Plan the crop grid of an image and optionally write the tiles");
  tile->add_option("image", tile_image, "PNG or JPEG input")->required();
  tile_flags.add(tile, false);
  tile->add_flag("--emit-tiles", tile_flags.emit_tiles, "Write tile_{row}_{col}.png and thumbnail.png");

  auto* weigh = app.add_subcommand("weigh", "Compute tile weights, write a report and a heatmap");
  weigh->add_option("images", weigh_images, "PNG or JPEG inputs")->required();
  weigh_flags.add(weigh, true);

  auto* ablate = app.add_subcommand("ablate", "Compare tile removal settings");
  ablate->add_option("image", ablate_image, "PNG or JPEG input")->required();
  ablate->add_option("--remove", removals, "setting:k with setting top, second-top or bottom (repeatable)");
  ablate->add_option("--rank-by", rank_by, "Ranking used to pick tiles: similarity or weight");
  ablate_flags.add(ablate, true);

  auto* init = app.add_subcommand("init-params", "Write a seeded parameter store");
  init_flags.out_dir = "params.json";
  init_flags.add(init, true);

  auto* verify = app.add_subcommand("verify", "Run the built-in property checks");
  verify->add_option("--suite", suite, "all, gradients, simplex or shuffle");
  verify_flags.add(verify, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*tile) return cmd_tile(tile_image, tile_flags.resolve(), out);
    if (*weigh) return cmd_weigh(weigh_images, weigh_flags.resolve(), out);
    if (*ablate) return cmd_ablate(ablate_image, removals, rank_by, ablate_flags.resolve(), out);
    if (*init) return cmd_init_params(init_flags.resolve(), out);
    if (*verify) return cmd_verify(suite, verify_flags.resolve(), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"gswa"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data(), out, err);
}

}  // namespace gswa::cli
