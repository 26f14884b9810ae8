#include "slimbench/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "slimbench/error.hpp"

namespace slimbench {
namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail_validation("config: '" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) fail_validation("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail_validation("config: '" + section + "." + key + "' has the wrong type");
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out, const std::string& section) {
  std::string value;
  read(obj, key, value, section);
  if (!value.empty()) out = value;
}

}  // namespace

std::filesystem::path RunConfig::embeddings_path() const {
  return paths.embeddings.empty() ? paths.output_dir / "embeddings.jsonl" : paths.embeddings;
}

void RunConfig::validate() const {
  if (kmeans.k < 1) fail_validation("config: kmeans.k must be >= 1");
  if (kmeans.max_iter < 1) fail_validation("config: kmeans.max_iter must be >= 1");
  if (!(kmeans.tol >= 0.0)) fail_validation("config: kmeans.tol must be >= 0");
  if (kmeans.n_init < 1) fail_validation("config: kmeans.n_init must be >= 1");
  if (sampler.n_intervals < 1) fail_validation("config: sampler.n_intervals must be >= 1");
  if (sampler.retention && !(*sampler.retention > 0.0 && *sampler.retention <= 1.0)) {
    fail_validation("config: sampler.retention must be in (0, 1]");
  }
  if (!(fidelity.drop_threshold > 0.0)) fail_validation("config: fidelity.drop_threshold must be > 0");
  if (paths.output_dir.empty()) fail_validation("config: paths.output_dir must be set");
  xray.thresholds.validate();
  embed.validate();
}

RunConfig config_from_json_text(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) fail_validation("config: malformed JSON");
  check_keys(root, "", {"paths", "schema", "embed", "kmeans", "xray", "sampler", "fidelity"});
  RunConfig cfg;

  if (auto p = root.find("paths"); p != root.end()) {
    check_keys(*p, "paths", {"dataset", "embeddings", "cache_dir", "output_dir"});
    read_path(*p, "dataset", cfg.paths.dataset, "paths");
    read_path(*p, "embeddings", cfg.paths.embeddings, "paths");
    read_path(*p, "cache_dir", cfg.paths.cache_dir, "paths");
    read_path(*p, "output_dir", cfg.paths.output_dir, "paths");
  }
  if (auto s = root.find("schema"); s != root.end()) {
    check_keys(*s, "schema", {"id", "question", "answer", "meta"});
    read(*s, "id", cfg.schema.id, "schema");
    read(*s, "question", cfg.schema.question, "schema");
    read(*s, "answer", cfg.schema.answer, "schema");
    read(*s, "meta", cfg.schema.meta, "schema");
  }
  if (auto e = root.find("embed"); e != root.end()) {
    check_keys(*e, "embed",
               {"endpoint_url", "model_id", "system_prompt", "wire_format", "batch_size", "max_in_flight", "timeout",
                "retry_limit", "token_env", "backoff_initial", "backoff_max"});
    read(*e, "endpoint_url", cfg.embed.endpoint_url, "embed");
    read(*e, "model_id", cfg.embed.model_id, "embed");
    read(*e, "system_prompt", cfg.embed.system_prompt, "embed");
    std::string wire;
    read(*e, "wire_format", wire, "embed");
    if (!wire.empty()) cfg.embed.wire = embed::wire_format_from_string(wire);
    read(*e, "batch_size", cfg.embed.batch_size, "embed");
    read(*e, "max_in_flight", cfg.embed.max_in_flight, "embed");
    read(*e, "timeout", cfg.embed.timeout_seconds, "embed");
    read(*e, "retry_limit", cfg.embed.retry_limit, "embed");
    read(*e, "token_env", cfg.embed.token_env, "embed");
    read(*e, "backoff_initial", cfg.embed.backoff_initial_seconds, "embed");
    read(*e, "backoff_max", cfg.embed.backoff_max_seconds, "embed");
  }
  if (auto k = root.find("kmeans"); k != root.end()) {
    check_keys(*k, "kmeans", {"k", "seed", "max_iter", "tol", "n_init"});
    read(*k, "k", cfg.kmeans.k, "kmeans");
    read(*k, "seed", cfg.kmeans.seed, "kmeans");
    read(*k, "max_iter", cfg.kmeans.max_iter, "kmeans");
    read(*k, "tol", cfg.kmeans.tol, "kmeans");
    read(*k, "n_init", cfg.kmeans.n_init, "kmeans");
  }
  if (auto x = root.find("xray"); x != root.end()) {
    check_keys(*x, "xray",
               {"core_distance", "sparse_distance", "silhouette_aggressive", "silhouette_floor", "retention_aggressive",
                "retention_conservative_min", "retention_conservative_max", "silhouette_subsample"});
    auto& t = cfg.xray.thresholds;
    read(*x, "core_distance", t.core_distance, "xray");
    read(*x, "sparse_distance", t.sparse_distance, "xray");
    read(*x, "silhouette_aggressive", t.silhouette_aggressive, "xray");
    read(*x, "silhouette_floor", t.silhouette_floor, "xray");
    read(*x, "retention_aggressive", t.retention_aggressive, "xray");
    read(*x, "retention_conservative_min", t.retention_conservative_min, "xray");
    read(*x, "retention_conservative_max", t.retention_conservative_max, "xray");
    if (x->contains("silhouette_subsample") && !(*x)["silhouette_subsample"].is_null()) {
      std::size_t n = 0;
      read(*x, "silhouette_subsample", n, "xray");
      cfg.xray.silhouette_subsample = n;
    }
  }
  if (auto s = root.find("sampler"); s != root.end()) {
    check_keys(*s, "sampler", {"n_intervals", "bin_mode", "retention", "gen_template"});
    read(*s, "n_intervals", cfg.sampler.n_intervals, "sampler");
    std::string mode;
    read(*s, "bin_mode", mode, "sampler");
    if (!mode.empty()) cfg.sampler.mode = sampler::bin_mode_from_string(mode);
    if (s->contains("retention") && !(*s)["retention"].is_null()) {
      double r = 0.0;
      read(*s, "retention", r, "sampler");
      cfg.sampler.retention = r;
    }
    if (s->contains("gen_template") && !(*s)["gen_template"].is_null()) {
      std::string tmpl;
      read(*s, "gen_template", tmpl, "sampler");
      cfg.sampler.gen_template = tmpl;
    }
  }
  if (auto f = root.find("fidelity"); f != root.end()) {
    check_keys(*f, "fidelity", {"drop_threshold"});
    read(*f, "drop_threshold", cfg.fidelity.drop_threshold, "fidelity");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

}  // namespace slimbench
