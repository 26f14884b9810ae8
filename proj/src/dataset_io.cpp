#include "slimbench/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"

namespace slimbench::io {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  return in;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// Strings pass through; any other JSON value is stored in its compact text form.
std::string scalar_text(const json& value) { return value.is_string() ? value.get<std::string>() : value.dump(); }

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

Dataset::Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) fail_validation("dataset is empty");
  index_.reserve(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.id.empty()) fail_validation("sample #" + std::to_string(i) + " has an empty id");
    if (s.question.empty()) fail_validation("sample '" + s.id + "' has an empty question");
    if (!index_.emplace(s.id, i).second) fail_validation("duplicate sample id '" + s.id + "'");
  }
}

std::optional<std::size_t> Dataset::index_of(const std::string& id) const {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  return std::nullopt;
}

std::string Dataset::fingerprint() const {
  std::string joined;
  for (const auto& s : samples_) {
    joined += s.id;
    joined.push_back('\n');
  }
  return sha256_hex(joined);
}

Dataset load_samples(const std::filesystem::path& path, const FieldMapping& mapping) {
  auto in = open_input(path);
  std::vector<Sample> samples;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) fail_validation(where(path, line_no) + ": malformed JSON object");

    auto id_it = obj.find(mapping.id);
    if (id_it == obj.end() || id_it->is_null()) {
      fail_validation(where(path, line_no) + ": missing field '" + mapping.id + "'");
    }
    auto q_it = obj.find(mapping.question);
    if (q_it == obj.end() || !q_it->is_string()) {
      fail_validation(where(path, line_no) + ": missing string field '" + mapping.question + "'");
    }

    Sample s;
    s.id = scalar_text(*id_it);
    s.question = q_it->get<std::string>();
    if (s.id.empty()) fail_validation(where(path, line_no) + ": empty id");
    if (s.question.empty()) fail_validation(where(path, line_no) + ": empty question for id '" + s.id + "'");
    if (auto a = obj.find(mapping.answer); a != obj.end() && !a->is_null()) s.reference = scalar_text(*a);

    for (const auto& [key, value] : obj.items()) {
      if (key == mapping.id || key == mapping.question || key == mapping.answer || key == mapping.meta) continue;
      s.meta[key] = scalar_text(value);
    }
    if (auto m = obj.find(mapping.meta); m != obj.end()) {
      if (m->is_object()) {
        for (const auto& [key, value] : m->items()) s.meta[key] = scalar_text(value);
      } else if (!m->is_null()) {
        s.meta[mapping.meta] = scalar_text(*m);
      }
    }

    auto [it, inserted] = first_line.emplace(s.id, line_no);
    if (!inserted) {
      fail_validation(path.string() + ": duplicate id '" + s.id + "' on lines " + std::to_string(it->second) +
                      " and " + std::to_string(line_no));
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) fail_validation(path.string() + ": no samples");
  return Dataset(std::move(samples));
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path) {
  static const std::regex kNonFinite(R"((^|[^A-Za-z_])[-+]?(nan|inf|infinity)([^A-Za-z_]|$))", std::regex::icase);
  auto in = open_input(path);
  std::vector<EmbeddingRecord> records;
  std::size_t dims = 0;
  std::size_t dims_line = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      // JSON has no NaN/Infinity literals; a parse failure inside the vector
      // usually means a writer emitted one.
      const auto key = line.find("\"embedding\"");
      if (key != std::string::npos && std::regex_search(line.substr(key + 11), kNonFinite)) {
        fail_validation(where(path, line_no) + ": non-finite embedding component");
      }
      fail_validation(where(path, line_no) + ": malformed JSON");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("embedding") || !obj["embedding"].is_array()) {
      fail_validation(where(path, line_no) + R"(: expected {"id": ..., "embedding": [...]})");
    }
    EmbeddingRecord rec;
    rec.id = scalar_text(obj["id"]);
    const auto& values = obj["embedding"];
    rec.vector.reserve(values.size());
    for (const auto& v : values) {
      if (!v.is_number()) fail_validation(where(path, line_no) + ": non-numeric embedding component");
      const double x = v.get<double>();
      if (!std::isfinite(x)) fail_validation(where(path, line_no) + ": non-finite embedding component");
      rec.vector.push_back(x);
    }
    if (rec.vector.size() < 2) fail_validation(where(path, line_no) + ": embedding dimension must be >= 2");
    if (dims == 0) {
      dims = rec.vector.size();
      dims_line = line_no;
    } else if (rec.vector.size() != dims) {
      fail_validation(path.string() + ": dimension mismatch, line " + std::to_string(dims_line) + " has d=" +
                      std::to_string(dims) + " but line " + std::to_string(line_no) + " has d=" +
                      std::to_string(rec.vector.size()));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail_io("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail_io("cannot move output into place at " + path.string());
  }
}

WriteReceipt write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path) {
  std::string out;
  for (const auto& rec : records) {
    ordered_json line;
    line["id"] = rec.id;
    line["embedding"] = rec.vector;
    out += line.dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
  return {records.size(), sha256_hex(out)};
}

EmbeddingMatrix align(const Dataset& dataset, std::span<const EmbeddingRecord> records) {
  if (records.empty()) fail_validation("no embedding records to align");
  const std::size_t dims = records.front().vector.size();
  std::vector<const EmbeddingRecord*> by_row(dataset.size(), nullptr);
  std::vector<std::string> extra;
  std::vector<std::string> duplicate;
  for (const auto& rec : records) {
    if (rec.vector.size() != dims) fail_validation("embedding dimension mismatch for id '" + rec.id + "'");
    auto row = dataset.index_of(rec.id);
    if (!row) {
      extra.push_back(rec.id);
    } else if (by_row[*row] != nullptr) {
      duplicate.push_back(rec.id);
    } else {
      by_row[*row] = &rec;
    }
  }
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < by_row.size(); ++i) {
    if (by_row[i] == nullptr) missing.push_back(dataset[i].id);
  }
  if (!missing.empty() || !extra.empty() || !duplicate.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s;
    };
    std::string msg = "embedding sidecar does not match dataset:";
    if (!missing.empty()) msg += " missing id(s): " + list(missing) + ";";
    if (!extra.empty()) msg += " extra id(s): " + list(extra) + ";";
    if (!duplicate.empty()) msg += " duplicate id(s): " + list(duplicate) + ";";
    msg.pop_back();
    fail_validation(msg);
  }

  std::vector<std::string> ids;
  std::vector<double> data;
  ids.reserve(dataset.size());
  data.reserve(dataset.size() * dims);
  for (std::size_t i = 0; i < by_row.size(); ++i) {
    ids.push_back(dataset[i].id);
    data.insert(data.end(), by_row[i]->vector.begin(), by_row[i]->vector.end());
  }
  return EmbeddingMatrix(std::move(ids), dims, std::move(data));
}

std::string sample_to_jsonl(const Sample& sample) {
  ordered_json obj;
  obj["id"] = sample.id;
  obj["question"] = sample.question;
  if (sample.reference) obj["answer"] = *sample.reference;
  if (!sample.meta.empty()) {
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : sample.meta) meta[k] = v;
    obj["meta"] = std::move(meta);
  }
  return obj.dump();
}

namespace {

std::vector<std::size_t> resolve_rows(const Dataset& dataset, const CompressedSet& plan) {
  std::vector<std::size_t> rows;
  rows.reserve(plan.selected_ids.size());
  std::unordered_map<std::string, bool> seen;
  std::string unknown;
  for (const auto& id : plan.selected_ids) {
    auto row = dataset.index_of(id);
    if (!row) {
      unknown += (unknown.empty() ? "" : ", ") + id;
      continue;
    }
    if (!seen.emplace(id, true).second) fail_validation("plan selects id '" + id + "' more than once");
    rows.push_back(*row);
  }
  if (!unknown.empty()) fail_validation("plan references unknown id(s): " + unknown);
  return rows;
}

}  // namespace

WriteReceipt export_subset(const Dataset& dataset, const CompressedSet& plan, const std::filesystem::path& path) {
  const auto rows = resolve_rows(dataset, plan);
  std::string out;
  for (auto row : rows) {
    out += sample_to_jsonl(dataset[row]);
    out.push_back('\n');
  }
  write_file_atomic(path, out);
  return {rows.size(), sha256_hex(out)};
}

WriteReceipt export_gen_seeds(const CompressedSet& plan, const Dataset& dataset, const std::string& prompt_template,
                              const std::filesystem::path& path) {
  static constexpr std::string_view kPlaceholder = "{question}";
  const auto first = prompt_template.find(kPlaceholder);
  if (first == std::string::npos) fail_validation("generation template lacks the {question} placeholder");
  if (prompt_template.find(kPlaceholder, first + 1) != std::string::npos) {
    fail_validation("generation template contains {question} more than once");
  }
  const auto rows = resolve_rows(dataset, plan);
  std::string out;
  for (auto row : rows) {
    std::string prompt = prompt_template;
    prompt.replace(first, kPlaceholder.size(), dataset[row].question);
    ordered_json obj;
    obj["id"] = dataset[row].id;
    obj["prompt"] = std::move(prompt);
    out += obj.dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
  return {rows.size(), sha256_hex(out)};
}

}  // namespace slimbench::io
