#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "slimbench/dataset_io.hpp"
#include "slimbench/embedding_client.hpp"
#include "slimbench/geometry.hpp"
#include "slimbench/sampler.hpp"
#include "slimbench/xray.hpp"

namespace slimbench {

struct PathsConfig {
  std::filesystem::path dataset;
  std::filesystem::path embeddings;  // defaults to <output_dir>/embeddings.jsonl
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir = "out";
};

struct SamplerConfig {
  int n_intervals = 5;
  sampler::BinMode mode = sampler::BinMode::EqualWidth;
  std::optional<double> retention;  // overrides the X-ray recommendation
  std::optional<std::string> gen_template;
};

struct XRayConfig {
  xray::XRayThresholds thresholds;
  std::optional<std::size_t> silhouette_subsample;  // 0 evaluates every row
};

struct FidelityConfig {
  double drop_threshold = 0.10;
};

// One JSON document describes a whole run. Unknown keys are rejected.
struct RunConfig {
  PathsConfig paths;
  io::FieldMapping schema;
  embed::EmbedConfig embed;
  geometry::KMeansOptions kmeans;  // k defaults to 100
  XRayConfig xray;
  SamplerConfig sampler;
  FidelityConfig fidelity;

  std::filesystem::path embeddings_path() const;
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text);

}  // namespace slimbench
