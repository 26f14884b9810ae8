#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace slimbench::fidelity {

enum class EvalSource { Full, Compressed, Generalization };

struct EvalRecord {
  std::string model_name;
  EvalSource source = EvalSource::Full;
  std::vector<std::string> ids;  // file order
  std::unordered_map<std::string, bool> correct;
};

// Mean correctness over all ids, or over `subset` when given.
// Throws ValidationError on an empty denominator or ids the record lacks.
double accuracy(const EvalRecord& record, std::optional<std::span<const std::string>> subset = std::nullopt);

// Signed relative fluctuation (acc_comp - acc_full) / acc_full.
double delta(double acc_full, double acc_comp);

// Spearman rank correlation with average ranks for ties (Pearson on ranks).
double spearman(const std::map<std::string, double>& full_scores, const std::map<std::string, double>& comp_scores);

// Average (1-based) ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct ContaminationResult {
  bool flag = false;
  double relative_drop = 0.0;
};

inline constexpr double kDefaultDropThreshold = 0.10;

ContaminationResult contamination_check(double acc_comp, double acc_gen, double drop_threshold = kDefaultDropThreshold);

enum class MatchMode { Strict, Normalized, ChoiceLetter };

bool score_exact_match(const std::string& prediction, const std::string& reference, MatchMode mode);

// First standalone uppercase A-D token, if any.
std::optional<char> first_choice_letter(const std::string& text);

struct ModelFidelity {
  std::string model;
  double acc_full = 0.0;
  double acc_comp = 0.0;
  double delta = 0.0;
  std::optional<double> acc_gen;
  std::optional<ContaminationResult> contamination;
};

struct FidelityReport {
  std::vector<ModelFidelity> per_model;  // sorted by model name
  std::optional<double> spearman_rho;
  std::size_t n_models = 0;
  std::string notice;  // why spearman was omitted, if it was
};

struct ModelAccuracies {
  double acc_full = 0.0;
  double acc_comp = 0.0;
  std::optional<double> acc_gen;
};

FidelityReport build_report(const std::map<std::string, ModelAccuracies>& models,
                            double drop_threshold = kDefaultDropThreshold);

// Eval files hold one or more sections, each a header line {"model": ...}
// (optionally with "source") followed by {"id": ..., "correct": bool} lines.
std::vector<EvalRecord> load_eval_records(const std::filesystem::path& path, EvalSource default_source);

const char* to_string(EvalSource source) noexcept;
MatchMode match_mode_from_string(const std::string& name);

}  // namespace slimbench::fidelity
