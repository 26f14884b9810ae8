#include "slimbench/serialize.hpp"

#include <charconv>
#include <fstream>

#include "slimbench/error.hpp"

namespace slimbench::serialize {

std::string dump(const Json& value) { return value.dump(2) + "\n"; }

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) fail_io("number formatting failed");
  return {buf, end};
}

Json to_json(const geometry::ClusterModel& model, const std::vector<std::string>& ids,
             const std::string& source_dataset_id) {
  Json out;
  out["source_dataset_id"] = source_dataset_id;
  out["k"] = model.k;
  out["dims"] = model.dims;
  out["seed"] = model.seed;
  out["iterations_run"] = model.iterations_run;
  out["inertia"] = model.inertia;
  out["inertia_trace"] = model.inertia_trace;
  Json centroids = Json::array();
  for (int c = 0; c < model.k; ++c) {
    const auto row = model.centroid(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  out["centroids"] = std::move(centroids);
  out["ids"] = ids;
  out["assignments"] = model.assignments;
  return out;
}

geometry::ClusterModel cluster_model_from_json(const Json& value) {
  try {
    geometry::ClusterModel model;
    model.k = value.at("k").get<int>();
    model.dims = value.at("dims").get<std::size_t>();
    model.seed = value.at("seed").get<std::uint64_t>();
    model.iterations_run = value.at("iterations_run").get<int>();
    model.inertia = value.at("inertia").get<double>();
    model.inertia_trace = value.at("inertia_trace").get<std::vector<double>>();
    for (const auto& row : value.at("centroids")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != model.dims) fail_validation("cluster model centroid has the wrong dimension");
      model.centroids.insert(model.centroids.end(), v.begin(), v.end());
    }
    model.assignments = value.at("assignments").get<std::vector<int>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("malformed cluster model: ") + e.what());
  }
}

Json to_json(const xray::XRayThresholds& t) {
  Json out;
  out["core_distance"] = t.core_distance;
  out["sparse_distance"] = t.sparse_distance;
  out["silhouette_aggressive"] = t.silhouette_aggressive;
  out["silhouette_floor"] = t.silhouette_floor;
  out["retention_aggressive"] = t.retention_aggressive;
  out["retention_conservative_min"] = t.retention_conservative_min;
  out["retention_conservative_max"] = t.retention_conservative_max;
  return out;
}

Json to_json(const xray::XRayReport& r, const xray::XRayThresholds& t) {
  Json out;
  out["n_samples"] = r.n_samples;
  out["k"] = r.k;
  out["verdict"] = xray::to_string(r.verdict);
  out["recommended_retention"] = r.recommended_retention;
  out["silhouette_mean"] = r.silhouette_mean;
  out["silhouette_evaluated"] = r.silhouette_evaluated;
  out["core_fraction"] = r.core_fraction;
  out["middle_fraction"] = r.middle_fraction;
  out["sparse_fraction"] = r.sparse_fraction;
  out["thresholds"] = to_json(t);
  Json clusters = Json::array();
  for (const auto& c : r.per_cluster) {
    Json item;
    item["cluster_id"] = c.cluster_id;
    item["size"] = c.size;
    item["mean_distance"] = c.mean_distance;
    item["max_distance"] = c.max_distance;
    item["histogram"] = c.histogram;
    clusters.push_back(std::move(item));
  }
  out["per_cluster"] = std::move(clusters);
  return out;
}

xray::XRayReport xray_report_from_json(const Json& value) {
  try {
    xray::XRayReport r;
    r.n_samples = value.at("n_samples").get<std::size_t>();
    r.k = value.at("k").get<int>();
    r.verdict = xray::verdict_from_string(value.at("verdict").get<std::string>());
    r.recommended_retention = value.at("recommended_retention").get<double>();
    r.silhouette_mean = value.at("silhouette_mean").get<double>();
    r.silhouette_evaluated = value.at("silhouette_evaluated").get<std::size_t>();
    r.core_fraction = value.at("core_fraction").get<double>();
    r.middle_fraction = value.at("middle_fraction").get<double>();
    r.sparse_fraction = value.at("sparse_fraction").get<double>();
    for (const auto& item : value.at("per_cluster")) {
      xray::ClusterStats c;
      c.cluster_id = item.at("cluster_id").get<int>();
      c.size = item.at("size").get<std::size_t>();
      c.mean_distance = item.at("mean_distance").get<double>();
      c.max_distance = item.at("max_distance").get<double>();
      c.histogram = item.at("histogram").get<std::array<std::size_t, xray::kHistogramBins>>();
      r.per_cluster.push_back(c);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("malformed xray report: ") + e.what());
  }
}

Json to_json(const sampler::CompressionPlan& plan, const io::CompressedSet& set) {
  Json out;
  out["source_dataset_id"] = set.source_dataset_id;
  out["provenance"] = set.provenance;
  out["seed"] = plan.seed;
  out["retention_target"] = plan.retention_target;
  out["achieved_retention"] = plan.achieved_retention;
  out["n_intervals"] = plan.n_intervals;
  out["bin_mode"] = sampler::to_string(plan.mode);
  out["selected_count"] = plan.selected_ids.size();
  Json clusters = Json::array();
  for (const auto& part : plan.per_cluster) {
    Json item;
    item["cluster_id"] = part.cluster_id;
    item["edges"] = part.edges;
    Json bins = Json::array();
    for (std::size_t b = 0; b < part.members.size(); ++b) {
      Json bin;
      bin["members"] = part.members[b].size();
      bin["selected"] = part.selected[b];
      bins.push_back(std::move(bin));
    }
    item["bins"] = std::move(bins);
    clusters.push_back(std::move(item));
  }
  out["per_cluster"] = std::move(clusters);
  out["selected_ids"] = plan.selected_ids;
  return out;
}

Json to_json(const fidelity::FidelityReport& report) {
  Json out;
  out["n_models"] = report.n_models;
  out["spearman_rho"] = report.spearman_rho ? Json(*report.spearman_rho) : Json(nullptr);
  if (!report.notice.empty()) out["notice"] = report.notice;
  Json rows = Json::array();
  for (const auto& m : report.per_model) {
    Json row;
    row["model"] = m.model;
    row["acc_full"] = m.acc_full;
    row["acc_comp"] = m.acc_comp;
    row["delta"] = m.delta;
    if (m.acc_gen) row["acc_gen"] = *m.acc_gen;
    if (m.contamination) {
      row["contamination"] = {{"flag", m.contamination->flag}, {"relative_drop", m.contamination->relative_drop}};
    }
    rows.push_back(std::move(row));
  }
  out["per_model"] = std::move(rows);
  return out;
}

Json to_json(const io::WriteReceipt& receipt) {
  Json out;
  out["count"] = receipt.count;
  out["sha256"] = receipt.sha256;
  return out;
}

std::string projection_csv(const std::vector<std::string>& ids, const xray::Projection& projection) {
  if (ids.size() != projection.coords.size()) fail_validation("projection rows do not match ids");
  auto quote = [](const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    return out + "\"";
  };
  std::string out = "id,x,y\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += quote(ids[i]) + "," + format_double(projection.coords[i][0]) + "," +
           format_double(projection.coords[i][1]) + "\n";
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  Json value = Json::parse(in, nullptr, false);
  if (value.is_discarded()) fail_validation(path.string() + ": malformed JSON");
  return value;
}

}  // namespace slimbench::serialize
