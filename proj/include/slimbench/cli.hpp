#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slimbench/config.hpp"

namespace slimbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Artifact names inside the output directory.
inline constexpr const char* kEmbeddingsFile = "embeddings.jsonl";
inline constexpr const char* kClusterModelFile = "cluster_model.json";
inline constexpr const char* kXRayReportFile = "xray_report.json";
inline constexpr const char* kProjectionFile = "projection.csv";
inline constexpr const char* kCompressedFile = "compressed.jsonl";
inline constexpr const char* kPlanFile = "plan.json";
inline constexpr const char* kGenSeedsFile = "gen_seeds.jsonl";
inline constexpr const char* kFidelityFile = "fidelity_report.json";

struct FidelityInputs {
  std::filesystem::path full_eval;
  std::vector<std::filesystem::path> comp_evals;
  std::optional<std::filesystem::path> gen_eval;
  std::optional<std::filesystem::path> plan;  // plan.json; restricts accuracies to the selected ids
};

void cmd_embed(const RunConfig& config, std::ostream& out);
void cmd_xray(const RunConfig& config, std::ostream& out);
void cmd_compress(const RunConfig& config, std::ostream& out);
void cmd_fidelity(const RunConfig& config, const FidelityInputs& inputs, std::ostream& out);

// Parses arguments, runs one subcommand, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slimbench::cli
