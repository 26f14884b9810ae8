#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "slimbench/dataset_io.hpp"
#include "slimbench/fidelity.hpp"
#include "slimbench/geometry.hpp"
#include "slimbench/sampler.hpp"
#include "slimbench/xray.hpp"

// JSON/CSV forms of the pipeline artifacts. Key order is fixed so that equal
// inputs always produce byte-identical files.
namespace slimbench::serialize {

using Json = nlohmann::ordered_json;

// Pretty-printed with a trailing newline.
std::string dump(const Json& value);

Json to_json(const geometry::ClusterModel& model, const std::vector<std::string>& ids,
             const std::string& source_dataset_id);
geometry::ClusterModel cluster_model_from_json(const Json& value);

Json to_json(const xray::XRayThresholds& thresholds);
Json to_json(const xray::XRayReport& report, const xray::XRayThresholds& thresholds);
xray::XRayReport xray_report_from_json(const Json& value);

Json to_json(const sampler::CompressionPlan& plan, const io::CompressedSet& set);

Json to_json(const fidelity::FidelityReport& report);

Json to_json(const io::WriteReceipt& receipt);

// "id,x,y" header then one row per sample; shortest round-trip decimals.
std::string projection_csv(const std::vector<std::string>& ids, const xray::Projection& projection);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

Json read_json_file(const std::filesystem::path& path);

}  // namespace slimbench::serialize
