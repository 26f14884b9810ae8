#include "slimbench/embedding_client.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <regex>
#include <thread>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"

namespace slimbench::embed {
namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(url, match, kUrl)) fail_validation("embedding endpoint is not an http(s) URL: '" + url + "'");
  return {match[1].str(), match[2].matched ? match[2].str() : std::string("/")};
}

// A failed request: retryable failures are transport errors, 429 and 5xx.
struct RequestFailure {
  std::string message;
  bool retryable = false;
};

std::vector<double> parse_vector(const json& value, const std::string& what) {
  if (!value.is_array()) throw RequestFailure{what + ": embedding is not an array", false};
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) throw RequestFailure{what + ": non-numeric embedding component", false};
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw RequestFailure{what + ": non-finite embedding component", false};
    out.push_back(x);
  }
  if (out.empty()) throw RequestFailure{what + ": empty embedding", false};
  return out;
}

struct Task {
  std::vector<std::size_t> positions;  // indices into the pending list
};

class Worker {
 public:
  Worker(const EmbedConfig& config, const Endpoint& endpoint, const std::string& token)
      : config_(config), endpoint_(endpoint), client_(endpoint.origin) {
    const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    const auto secs = static_cast<time_t>(config.timeout_seconds);
    const auto usecs = static_cast<time_t>((timeout.count() - static_cast<double>(secs)) * 1e6);
    client_.set_connection_timeout(secs, usecs);
    client_.set_read_timeout(secs, usecs);
    client_.set_write_timeout(secs, usecs);
    if (!token.empty()) client_.set_bearer_token_auth(token);
  }

  std::vector<std::vector<double>> post(const std::string& body, std::size_t expected, const std::string& what) {
    auto res = client_.Post(endpoint_.path, body, "application/json");
    if (!res) throw RequestFailure{what + ": " + httplib::to_string(res.error()), true};
    if (res->status != 200) {
      const bool retryable = res->status == 429 || res->status >= 500;
      throw RequestFailure{what + ": HTTP " + std::to_string(res->status), retryable};
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) throw RequestFailure{what + ": response is not a JSON object", false};
    std::vector<std::vector<double>> out;
    if (config_.wire == WireFormat::Messages) {
      if (!reply.contains("embedding")) throw RequestFailure{what + ": response lacks \"embedding\"", false};
      out.push_back(parse_vector(reply["embedding"], what));
    } else {
      if (!reply.contains("data") || !reply["data"].is_array()) {
        throw RequestFailure{what + ": response lacks \"data\" array", false};
      }
      for (const auto& item : reply["data"]) {
        if (!item.is_object() || !item.contains("embedding")) {
          throw RequestFailure{what + ": data item lacks \"embedding\"", false};
        }
        out.push_back(parse_vector(item["embedding"], what));
      }
    }
    if (out.size() != expected) {
      throw RequestFailure{what + ": response count mismatch, expected " + std::to_string(expected) + " got " +
                               std::to_string(out.size()),
                           false};
    }
    return out;
  }

 private:
  const EmbedConfig& config_;
  const Endpoint& endpoint_;
  httplib::Client client_;
};

std::string request_body(const EmbedConfig& config, std::span<const io::Sample* const> batch) {
  json body;
  body["model"] = config.model_id;
  if (config.wire == WireFormat::Messages) {
    json messages = json::array();
    for (const auto& m : build_prompt(config, *batch.front())) messages.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(messages);
  } else {
    json input = json::array();
    for (const auto* s : batch) input.push_back(s->question);
    body["input"] = std::move(input);
  }
  return body.dump();
}

}  // namespace

void EmbedConfig::validate() const {
  if (batch_size < 1) fail_validation("embed.batch_size must be >= 1");
  if (max_in_flight < 1) fail_validation("embed.max_in_flight must be >= 1");
  if (retry_limit < 0 || retry_limit > 10) fail_validation("embed.retry_limit must be in [0, 10]");
  if (!(timeout_seconds > 0.0)) fail_validation("embed.timeout must be > 0");
  if (!(backoff_initial_seconds >= 0.0) || !(backoff_max_seconds >= backoff_initial_seconds)) {
    fail_validation("embed backoff bounds are inconsistent");
  }
}

std::vector<Message> build_prompt(const EmbedConfig& config, const io::Sample& sample) {
  return {{"system", config.system_prompt}, {"user", sample.question}};
}

std::string cache_key(const std::string& model_id, const std::string& system_prompt, const std::string& question) {
  std::string material;
  for (const auto* part : {&model_id, &system_prompt, &question}) {
    material += std::to_string(part->size());
    material.push_back(':');
    material += *part;
  }
  return sha256_hex(material);
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& digest) {
  return cache_dir / digest.substr(0, 2) / (digest + ".json");
}

std::optional<std::vector<double>> cache_load(const std::filesystem::path& cache_dir, const std::string& digest) {
  if (cache_dir.empty()) return std::nullopt;
  std::ifstream in(cache_path(cache_dir, digest), std::ios::binary);
  if (!in) return std::nullopt;
  json value = json::parse(in, nullptr, false);
  if (value.is_discarded() || !value.is_array()) return std::nullopt;
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) return std::nullopt;
    out.push_back(v.get<double>());
  }
  return out;
}

void cache_store(const std::filesystem::path& cache_dir, const std::string& digest, std::span<const double> vector) {
  if (cache_dir.empty()) return;
  const auto path = cache_path(cache_dir, digest);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail_io("cannot create cache directory " + path.parent_path().string());
  io::write_file_atomic(path, json(std::vector<double>(vector.begin(), vector.end())).dump());
}

std::vector<io::EmbeddingRecord> embed_batch(const EmbedConfig& config, std::span<const io::Sample> samples,
                                             EmbedStats* stats) {
  config.validate();
  EmbedStats local;
  std::vector<io::EmbeddingRecord> out(samples.size());
  std::vector<std::string> digests(samples.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].question.empty()) fail_validation("sample '" + samples[i].id + "' has an empty question");
    out[i].id = samples[i].id;
    digests[i] = cache_key(config.model_id, config.system_prompt, samples[i].question);
    if (auto hit = cache_load(config.cache_dir, digests[i])) {
      out[i].vector = std::move(*hit);
      ++local.cache_hits;
    } else {
      pending.push_back(i);
    }
  }

  if (!pending.empty()) {
    const auto endpoint = parse_endpoint(config.endpoint_url);
    const char* token_value = config.token_env.empty() ? nullptr : std::getenv(config.token_env.c_str());
    const std::string token = token_value ? token_value : "";

    const std::size_t per_task = config.wire == WireFormat::Messages ? 1 : static_cast<std::size_t>(config.batch_size);
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < pending.size(); p += per_task) {
      Task t;
      for (std::size_t q = p; q < std::min(pending.size(), p + per_task); ++q) t.positions.push_back(pending[q]);
      tasks.push_back(std::move(t));
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::atomic<std::size_t> requests{0};
    std::atomic<std::size_t> retries{0};
    std::mutex failure_mutex;
    std::vector<std::string> failures;
    std::vector<std::size_t> failed_rows;

    auto run = [&] {
      Worker worker(config, endpoint, token);
      while (!abort.load()) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) return;
        const auto& task = tasks[t];
        std::vector<const io::Sample*> batch;
        for (auto row : task.positions) batch.push_back(&samples[row]);
        const std::string body = request_body(config, batch);
        const std::string what = "sample '" + samples[task.positions.front()].id + "'" +
                                 (batch.size() > 1 ? " (+" + std::to_string(batch.size() - 1) + " more)" : "");
        double backoff = config.backoff_initial_seconds;
        for (int attempt = 0;; ++attempt) {
          try {
            ++requests;
            auto vectors = worker.post(body, batch.size(), what);
            for (std::size_t b = 0; b < batch.size(); ++b) out[task.positions[b]].vector = std::move(vectors[b]);
            break;
          } catch (const RequestFailure& f) {
            if (f.retryable && attempt < config.retry_limit && !abort.load()) {
              ++retries;
              std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
              backoff = std::min(backoff * 2.0, config.backoff_max_seconds);
              continue;
            }
            std::lock_guard lock(failure_mutex);
            failures.push_back(f.message);
            failed_rows.insert(failed_rows.end(), task.positions.begin(), task.positions.end());
            abort.store(true);
            break;
          }
        }
      }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), tasks.size());
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run);
    for (auto& th : threads) th.join();
    local.requests = requests.load();
    local.retries = retries.load();

    if (!failures.empty()) {
      std::sort(failed_rows.begin(), failed_rows.end());
      std::string ids;
      for (auto row : failed_rows) ids += (ids.empty() ? "" : ", ") + samples[row].id;
      if (stats) *stats = local;
      fail_io("embedding request failed for sample id(s) " + ids + ": " + failures.front());
    }
  }
  if (stats) *stats = local;

  const std::size_t dims = out.empty() ? 0 : out.front().vector.size();
  for (const auto& rec : out) {
    if (rec.vector.size() != dims) {
      fail_io("embedding dimension drift: '" + out.front().id + "' has d=" + std::to_string(dims) + " but '" + rec.id +
              "' has d=" + std::to_string(rec.vector.size()));
    }
  }
  for (auto row : pending) cache_store(config.cache_dir, digests[row], out[row].vector);
  return out;
}

const char* to_string(WireFormat wire) noexcept {
  return wire == WireFormat::Messages ? "messages" : "embeddings_api";
}

WireFormat wire_format_from_string(const std::string& name) {
  if (name == "messages") return WireFormat::Messages;
  if (name == "embeddings_api") return WireFormat::EmbeddingsApi;
  fail_validation("unknown wire format '" + name + "' (expected messages or embeddings_api)");
}

}  // namespace slimbench::embed
