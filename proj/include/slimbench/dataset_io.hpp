#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "slimbench/matrix.hpp"

namespace slimbench::io {

struct Sample {
  std::string id;
  std::string question;
  std::optional<std::string> reference;
  std::map<std::string, std::string> meta;

  bool operator==(const Sample&) const = default;
};

// Ordered, id-unique, non-empty collection of samples.
class Dataset {
 public:
  // Throws ValidationError on an empty list, an empty id or question, or a duplicate id.
  explicit Dataset(std::vector<Sample> samples);

  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const noexcept { return samples_[i]; }

  std::optional<std::size_t> index_of(const std::string& id) const;

  // SHA-256 over the ordered id list; identifies the source of a CompressedSet.
  std::string fingerprint() const;

 private:
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Which JSON keys hold each Sample field in an input file. Keys not mapped here
// land in Sample::meta (along with the entries of the `meta` object, if any).
struct FieldMapping {
  std::string id = "id";
  std::string question = "question";
  std::string answer = "answer";
  std::string meta = "meta";
};

struct EmbeddingRecord {
  std::string id;
  std::vector<double> vector;
};

struct CompressedSet {
  std::string source_dataset_id;
  std::vector<std::string> selected_ids;
  double retention_rate = 0.0;
  std::string provenance;  // hash of the X-ray report summary, empty for overrides
};

struct WriteReceipt {
  std::size_t count = 0;
  std::string sha256;
};

Dataset load_samples(const std::filesystem::path& path, const FieldMapping& mapping = {});

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);

// Writes records in the sidecar format, atomically (temp file + rename).
WriteReceipt write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path);

// Rows follow dataset order. Throws ValidationError listing every missing and extra id.
EmbeddingMatrix align(const Dataset& dataset, std::span<const EmbeddingRecord> records);

// One JSON object per selected sample, keys in fixed order: id, question, answer, meta.
WriteReceipt export_subset(const Dataset& dataset, const CompressedSet& plan, const std::filesystem::path& path);

// One {"id", "prompt"} line per selected sample; `prompt_template` must contain
// "{question}" exactly once.
WriteReceipt export_gen_seeds(const CompressedSet& plan, const Dataset& dataset, const std::string& prompt_template,
                              const std::filesystem::path& path);

// Serialized form of a single sample, as written by export_subset.
std::string sample_to_jsonl(const Sample& sample);

// Writes `content` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace slimbench::io
