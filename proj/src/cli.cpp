#include "slimbench/cli.hpp"

#include <CLI11.hpp>
#include <map>

#include "slimbench/dataset_io.hpp"
#include "slimbench/error.hpp"
#include "slimbench/fidelity.hpp"
#include "slimbench/hash.hpp"
#include "slimbench/sampler.hpp"
#include "slimbench/serialize.hpp"

namespace slimbench::cli {
namespace {

namespace fs = std::filesystem;
using serialize::Json;

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.paths.output_dir, ec);
  if (ec) fail_io("cannot create output directory " + config.paths.output_dir.string());
}

io::Dataset load_dataset(const RunConfig& config) {
  if (config.paths.dataset.empty()) fail_validation("paths.dataset is not set");
  return io::load_samples(config.paths.dataset, config.schema);
}

struct Loaded {
  io::Dataset dataset;
  EmbeddingMatrix matrix;  // L2-normalized
};

Loaded load_aligned(const RunConfig& config) {
  auto dataset = load_dataset(config);
  const auto sidecar = config.embeddings_path();
  if (!fs::exists(sidecar)) fail_validation("embedding sidecar " + sidecar.string() + " not found; run `embed` first");
  const auto records = io::load_embeddings(sidecar);
  auto matrix = io::align(dataset, records);
  return {std::move(dataset), std::move(matrix)};
}

void check_k(const RunConfig& config, std::size_t m) {
  if (static_cast<std::size_t>(config.kmeans.k) > m) {
    fail_validation("kmeans.k=" + std::to_string(config.kmeans.k) + " exceeds the sample count M=" + std::to_string(m));
  }
}

std::vector<std::string> read_plan_ids(const fs::path& path) {
  const auto plan = serialize::read_json_file(path);
  if (!plan.contains("selected_ids") || !plan["selected_ids"].is_array()) {
    fail_validation(path.string() + ": not a plan file (no selected_ids)");
  }
  return plan["selected_ids"].get<std::vector<std::string>>();
}

std::map<std::string, fidelity::EvalRecord> index_records(std::vector<fidelity::EvalRecord> records,
                                                          std::map<std::string, fidelity::EvalRecord> into = {}) {
  for (auto& rec : records) {
    const auto name = rec.model_name;
    if (!into.emplace(name, std::move(rec)).second) fail_validation("model '" + name + "' appears twice");
  }
  return into;
}

}  // namespace

void cmd_embed(const RunConfig& config, std::ostream& out) {
  const auto dataset = load_dataset(config);
  auto embed_config = config.embed;
  embed_config.cache_dir = config.paths.cache_dir;
  if (embed_config.endpoint_url.empty() && embed_config.cache_dir.empty()) {
    fail_validation("embed.endpoint_url is not set and there is no cache to read from");
  }
  const auto records = embed::embed_batch(embed_config, dataset.samples());
  ensure_output_dir(config);
  io::write_embeddings(records, config.paths.output_dir / kEmbeddingsFile);
  Json summary;
  summary["count"] = records.size();
  summary["d"] = records.empty() ? 0 : records.front().vector.size();
  out << summary.dump() << "\n";
}

void cmd_xray(const RunConfig& config, std::ostream& out) {
  auto [dataset, raw] = load_aligned(config);
  check_k(config, raw.rows());
  const auto matrix = geometry::l2_normalize(raw);
  const auto model = geometry::kmeans(matrix, config.kmeans);
  const auto report =
      xray::run_xray(matrix, model, config.xray.thresholds, config.kmeans.seed, config.xray.silhouette_subsample);
  const auto projection = xray::project_2d(matrix, config.kmeans.seed);

  ensure_output_dir(config);
  const auto& dir = config.paths.output_dir;
  io::write_file_atomic(dir / kClusterModelFile,
                        serialize::dump(serialize::to_json(model, matrix.ids(), dataset.fingerprint())));
  io::write_file_atomic(dir / kXRayReportFile, serialize::dump(serialize::to_json(report, config.xray.thresholds)));
  io::write_file_atomic(dir / kProjectionFile, serialize::projection_csv(matrix.ids(), projection));

  out << "verdict: " << xray::to_string(report.verdict) << "\n"
      << "recommended_retention: " << serialize::format_double(report.recommended_retention) << "\n"
      << "silhouette_mean: " << serialize::format_double(report.silhouette_mean) << "\n"
      << "core_fraction: " << serialize::format_double(report.core_fraction) << "\n"
      << "sparse_fraction: " << serialize::format_double(report.sparse_fraction) << "\n";
  if (projection.degenerate) out << "warning: embedding rank < 2, projection y column is zero\n";
}

void cmd_compress(const RunConfig& config, std::ostream& out) {
  const auto& dir = config.paths.output_dir;
  const auto report_path = dir / kXRayReportFile;
  const auto model_path = dir / kClusterModelFile;
  const bool have_report = fs::exists(report_path);
  const bool have_model = fs::exists(model_path);
  if (!config.sampler.retention && !have_report) {
    fail_validation("no " + std::string(kXRayReportFile) + " in " + dir.string() +
                    "; run `xray` first or pass --retention");
  }
  if (!have_model && !config.sampler.retention) {
    fail_validation("no " + std::string(kClusterModelFile) + " in " + dir.string() +
                    "; run `xray` first or pass --retention");
  }

  auto [dataset, raw] = load_aligned(config);
  const auto matrix = geometry::l2_normalize(raw);

  double retention = 0.0;
  std::string provenance;
  if (have_report) provenance = sha256_file(report_path);
  if (config.sampler.retention) {
    retention = *config.sampler.retention;
  } else {
    retention = serialize::xray_report_from_json(serialize::read_json_file(report_path)).recommended_retention;
  }

  geometry::ClusterModel model;
  if (have_model) {
    const auto doc = serialize::read_json_file(model_path);
    if (doc.value("source_dataset_id", std::string{}) != dataset.fingerprint() ||
        doc.value("ids", std::vector<std::string>{}) != matrix.ids()) {
      fail_validation(model_path.string() + " was built from a different dataset; rerun `xray`");
    }
    model = serialize::cluster_model_from_json(doc);
  } else {
    check_k(config, matrix.rows());
    model = geometry::kmeans(matrix, config.kmeans);
  }

  sampler::SamplerOptions options{config.sampler.n_intervals, config.sampler.mode};
  const auto result = sampler::compress(dataset, matrix, model, retention, config.kmeans.seed, options, provenance);

  ensure_output_dir(config);
  const auto receipt = io::export_subset(dataset, result.set, dir / kCompressedFile);
  io::write_file_atomic(dir / kPlanFile, serialize::dump(serialize::to_json(result.plan, result.set)));
  Json summary;
  summary["achieved_retention"] = result.plan.achieved_retention;
  summary["count"] = receipt.count;
  summary["sha256"] = receipt.sha256;
  if (config.sampler.gen_template) {
    const auto seeds = io::export_gen_seeds(result.set, dataset, *config.sampler.gen_template, dir / kGenSeedsFile);
    summary["gen_seeds"] = serialize::to_json(seeds);
  }
  out << summary.dump() << "\n";
}

void cmd_fidelity(const RunConfig& config, const FidelityInputs& inputs, std::ostream& out) {
  using fidelity::EvalSource;
  if (inputs.full_eval.empty()) fail_validation("fidelity needs --full");
  const auto full = index_records(fidelity::load_eval_records(inputs.full_eval, EvalSource::Full));
  std::map<std::string, fidelity::EvalRecord> comp;
  for (const auto& path : inputs.comp_evals) {
    comp = index_records(fidelity::load_eval_records(path, EvalSource::Compressed), std::move(comp));
  }
  std::map<std::string, fidelity::EvalRecord> gen;
  if (inputs.gen_eval) gen = index_records(fidelity::load_eval_records(*inputs.gen_eval, EvalSource::Generalization));

  std::optional<std::vector<std::string>> subset;
  if (inputs.plan) subset = read_plan_ids(*inputs.plan);
  std::optional<std::span<const std::string>> subset_view;
  if (subset) subset_view = std::span<const std::string>(*subset);

  for (const auto& [name, rec] : comp) {
    if (!full.count(name)) fail_validation("compressed-set verdicts for model '" + name + "' have no full-set record");
  }

  std::map<std::string, fidelity::ModelAccuracies> models;
  for (const auto& [name, rec] : full) {
    fidelity::ModelAccuracies acc;
    acc.acc_full = fidelity::accuracy(rec);
    if (auto c = comp.find(name); c != comp.end()) {
      acc.acc_comp = fidelity::accuracy(c->second, subset_view);
    } else if (subset) {
      acc.acc_comp = fidelity::accuracy(rec, subset_view);
    } else {
      fail_validation("no compressed-set verdicts for model '" + name + "' (pass --comp or --plan)");
    }
    if (auto g = gen.find(name); g != gen.end()) acc.acc_gen = fidelity::accuracy(g->second);
    models.emplace(name, acc);
  }
  const auto report = fidelity::build_report(models, config.fidelity.drop_threshold);

  ensure_output_dir(config);
  io::write_file_atomic(config.paths.output_dir / kFidelityFile, serialize::dump(serialize::to_json(report)));
  for (const auto& m : report.per_model) {
    out << m.model << ": acc_full=" << serialize::format_double(m.acc_full)
        << " acc_comp=" << serialize::format_double(m.acc_comp) << " delta=" << serialize::format_double(m.delta);
    if (m.contamination) out << " contamination=" << (m.contamination->flag ? "true" : "false");
    out << "\n";
  }
  if (report.spearman_rho) {
    out << "spearman: " << serialize::format_double(*report.spearman_rho) << "\n";
  } else {
    out << "notice: " << report.notice << "\n";
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark compression: embedding, X-ray diagnosis, stratified sampling, fidelity checks"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> retention;
  std::string output_dir;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--seed", seed, "Seed for clustering, silhouette subsampling and sampling");
  app.add_option("--retention", retention, "Retention override in (0, 1]");
  app.add_option("--output-dir", output_dir, "Directory for all artifacts");

  auto* embed_cmd = app.add_subcommand("embed", "Fetch embeddings for every sample into the sidecar");
  auto* xray_cmd = app.add_subcommand("xray", "Cluster, diagnose redundancy, export projection");
  auto* compress_cmd = app.add_subcommand("compress", "Select and export the compressed subset");
  auto* fidelity_cmd = app.add_subcommand("fidelity", "Compare compressed-set accuracy to full-set accuracy");

  FidelityInputs inputs;
  std::string gen_path;
  std::string plan_path;
  fidelity_cmd->add_option("--full", inputs.full_eval, "Full-set verdicts (JSONL)")->required();
  fidelity_cmd->add_option("--comp", inputs.comp_evals, "Compressed-set verdicts (JSONL), one or more");
  fidelity_cmd->add_option("--gen", gen_path, "Generalization-set verdicts (JSONL)");
  fidelity_cmd->add_option("--plan", plan_path, "plan.json selecting the compressed ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) config.kmeans.seed = *seed;
    if (retention) config.sampler.retention = *retention;
    if (!output_dir.empty()) config.paths.output_dir = output_dir;
    config.validate();

    if (embed_cmd->parsed()) {
      cmd_embed(config, out);
    } else if (xray_cmd->parsed()) {
      cmd_xray(config, out);
    } else if (compress_cmd->parsed()) {
      cmd_compress(config, out);
    } else if (fidelity_cmd->parsed()) {
      if (!gen_path.empty()) inputs.gen_eval = gen_path;
      if (!plan_path.empty()) inputs.plan = plan_path;
      cmd_fidelity(config, inputs, out);
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace slimbench::cli
