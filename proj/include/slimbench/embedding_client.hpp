#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimbench/dataset_io.hpp"

namespace slimbench::embed {

// Messages: POST {model, messages} -> {embedding: [...]}, one sample per request.
// EmbeddingsApi: POST {model, input: [...]} -> {data: [{embedding: [...]}, ...]},
// batch_size questions per request; the system prompt is not transmitted.
enum class WireFormat { Messages, EmbeddingsApi };

struct EmbedConfig {
  std::string endpoint_url;
  std::string model_id;
  std::string system_prompt = "You are a 5G communication expert.";
  WireFormat wire = WireFormat::Messages;
  int batch_size = 16;
  int max_in_flight = 4;
  double timeout_seconds = 60.0;
  int retry_limit = 3;
  std::filesystem::path cache_dir;  // empty disables caching
  std::string token_env = "SLIMBENCH_EMBED_TOKEN";
  double backoff_initial_seconds = 1.0;
  double backoff_max_seconds = 32.0;

  void validate() const;
};

struct Message {
  std::string role;
  std::string content;

  bool operator==(const Message&) const = default;
};

// [system(system_prompt), user(question)], verbatim.
std::vector<Message> build_prompt(const EmbedConfig& config, const io::Sample& sample);

// SHA-256 over the length-prefixed (model, system prompt, question) triple.
std::string cache_key(const std::string& model_id, const std::string& system_prompt, const std::string& question);

// <cache_dir>/<first two hex digits>/<digest>.json
std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& digest);

std::optional<std::vector<double>> cache_load(const std::filesystem::path& cache_dir, const std::string& digest);
void cache_store(const std::filesystem::path& cache_dir, const std::string& digest, std::span<const double> vector);

struct EmbedStats {
  std::size_t cache_hits = 0;
  std::size_t requests = 0;  // HTTP requests issued, retries included
  std::size_t retries = 0;
};

// One raw (unnormalized) record per sample, in input order. Cache hits issue
// no request. Blocks until every sample is resolved or the batch fails.
std::vector<io::EmbeddingRecord> embed_batch(const EmbedConfig& config, std::span<const io::Sample> samples,
                                             EmbedStats* stats = nullptr);

const char* to_string(WireFormat wire) noexcept;
WireFormat wire_format_from_string(const std::string& name);

}  // namespace slimbench::embed
