#include "slimbench/fidelity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "slimbench/error.hpp"

namespace slimbench::fidelity {

double accuracy(const EvalRecord& record, std::optional<std::span<const std::string>> subset) {
  std::size_t hits = 0;
  std::size_t total = 0;
  if (subset) {
    std::string unknown;
    for (const auto& id : *subset) {
      auto it = record.correct.find(id);
      if (it == record.correct.end()) {
        unknown += (unknown.empty() ? "" : ", ") + id;
        continue;
      }
      hits += it->second ? 1 : 0;
      ++total;
    }
    if (!unknown.empty()) {
      fail_validation("model '" + record.model_name + "' has no verdict for id(s): " + unknown);
    }
  } else {
    for (const auto& [id, ok] : record.correct) hits += ok ? 1 : 0;
    total = record.correct.size();
  }
  if (total == 0) fail_validation("accuracy over an empty id set");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double delta(double acc_full, double acc_comp) {
  if (!(acc_full > 0.0)) fail_validation("fluctuation ratio undefined for full-set accuracy 0");
  return (acc_comp - acc_full) / acc_full;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t r = i; r <= j; ++r) ranks[order[r]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::map<std::string, double>& full_scores, const std::map<std::string, double>& comp_scores) {
  if (full_scores.size() != comp_scores.size() ||
      !std::equal(full_scores.begin(), full_scores.end(), comp_scores.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    fail_validation("spearman: full and compressed score maps name different models");
  }
  if (full_scores.size() < 2) fail_validation("spearman: need at least 2 models");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [name, v] : full_scores) x.push_back(v);
  for (const auto& [name, v] : comp_scores) y.push_back(v);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) fail_validation("spearman: all scores tied on one side");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ContaminationResult contamination_check(double acc_comp, double acc_gen, double drop_threshold) {
  if (!(acc_comp > 0.0)) fail_validation("contamination check undefined for compressed-set accuracy 0");
  if (!(drop_threshold > 0.0)) fail_validation("drop threshold must be > 0");
  const double drop = (acc_comp - acc_gen) / acc_comp;
  return {drop > drop_threshold, drop};
}

namespace {

std::string normalize_text(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

std::optional<char> first_choice_letter(const std::string& text) {
  auto word_char = [](unsigned char c) { return std::isalnum(c) != 0 || c == '_'; };
  for (std::size_t i = 0; i < text.size();) {
    if (!word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_char(static_cast<unsigned char>(text[j]))) ++j;
    if (j - i == 1 && text[i] >= 'A' && text[i] <= 'D') return text[i];
    i = j;
  }
  return std::nullopt;
}

bool score_exact_match(const std::string& prediction, const std::string& reference, MatchMode mode) {
  if (reference.empty()) fail_validation("exact match needs a non-empty reference");
  switch (mode) {
    case MatchMode::Strict: return prediction == reference;
    case MatchMode::Normalized: return normalize_text(prediction) == normalize_text(reference);
    case MatchMode::ChoiceLetter: {
      const auto want = first_choice_letter(reference);
      if (!want) fail_validation("reference '" + reference + "' contains no choice letter A-D");
      const auto got = first_choice_letter(prediction);
      return got && *got == *want;
    }
  }
  return false;
}

FidelityReport build_report(const std::map<std::string, ModelAccuracies>& models, double drop_threshold) {
  FidelityReport report;
  std::map<std::string, double> full;
  std::map<std::string, double> comp;
  for (const auto& [name, acc] : models) {
    ModelFidelity row;
    row.model = name;
    row.acc_full = acc.acc_full;
    row.acc_comp = acc.acc_comp;
    row.delta = delta(acc.acc_full, acc.acc_comp);
    if (acc.acc_gen) {
      row.acc_gen = acc.acc_gen;
      row.contamination = contamination_check(acc.acc_comp, *acc.acc_gen, drop_threshold);
    }
    report.per_model.push_back(row);
    full[name] = acc.acc_full;
    comp[name] = acc.acc_comp;
  }
  report.n_models = models.size();
  if (models.size() < 2) {
    report.notice = "spearman omitted: needs at least 2 models";
  } else {
    try {
      report.spearman_rho = spearman(full, comp);
    } catch (const ValidationError& e) {
      report.notice = std::string("spearman omitted: ") + e.what();
    }
  }
  return report;
}

std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path, EvalSource default_source) {
  using json = nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; })) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) fail_validation(where() + ": malformed JSON object");
    if (obj.contains("model")) {
      EvalRecord rec;
      rec.model_name = obj["model"].is_string() ? obj["model"].get<std::string>() : obj["model"].dump();
      rec.source = default_source;
      if (auto s = obj.find("source"); s != obj.end() && s->is_string()) {
        const auto v = s->get<std::string>();
        if (v == "full") rec.source = EvalSource::Full;
        else if (v == "compressed") rec.source = EvalSource::Compressed;
        else if (v == "generalization") rec.source = EvalSource::Generalization;
        else fail_validation(where() + ": unknown source '" + v + "'");
      }
      records.push_back(std::move(rec));
      continue;
    }
    if (records.empty()) fail_validation(where() + ": verdict line before any {\"model\": ...} header");
    if (!obj.contains("id") || !obj.contains("correct") || !obj["correct"].is_boolean()) {
      fail_validation(where() + R"(: expected {"id": ..., "correct": true|false})");
    }
    const std::string id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    auto& rec = records.back();
    if (!rec.correct.emplace(id, obj["correct"].get<bool>()).second) {
      fail_validation(where() + ": duplicate verdict for id '" + id + "' in model '" + rec.model_name + "'");
    }
    rec.ids.push_back(id);
  }
  for (const auto& rec : records) {
    if (rec.ids.empty()) fail_validation(path.string() + ": model '" + rec.model_name + "' has no verdicts");
  }
  if (records.empty()) fail_validation(path.string() + ": no evaluation records");
  return records;
}

const char* to_string(EvalSource source) noexcept {
  switch (source) {
    case EvalSource::Full: return "full";
    case EvalSource::Compressed: return "compressed";
    case EvalSource::Generalization: return "generalization";
  }
  return "full";
}

MatchMode match_mode_from_string(const std::string& name) {
  if (name == "strict") return MatchMode::Strict;
  if (name == "normalized") return MatchMode::Normalized;
  if (name == "choice_letter") return MatchMode::ChoiceLetter;
  fail_validation("unknown match mode '" + name + "'");
}

}  // namespace slimbench::fidelity
