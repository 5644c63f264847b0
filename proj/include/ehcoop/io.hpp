#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehcoop/analysis.hpp"
#include "ehcoop/model.hpp"
#include "ehcoop/optimizer.hpp"
#include "ehcoop/oracle.hpp"

namespace ehcoop::io {

using Json = nlohmann::ordered_json;

// Config documents are flat JSON objects keyed by ScenarioConfig field names,
// with the noise given as `noise_power_dbm` and solver settings either flat
// or under "solver". A document may also carry a fixed instance in
// "channels" {h_p, h_sp, h_ss} and "harvests" {e_p, e_s}. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
struct ConfigDocument {
  ScenarioConfig config;
  std::optional<Instance> instance;
};

ConfigDocument parse_config(const Json& doc);
ConfigDocument load_config(const std::filesystem::path& path);

Json to_json(const ScenarioConfig& cfg);
Json to_json(const Instance& inst);
Json to_json(const PowerPolicy& policy);
Json to_json(const SolveReport& report);
Json to_json(const PropositionAudit& audit);
Json to_json(const KktAudit& audit);
Json to_json(const OracleResult& result);

// Config plus instance, loadable again with load_config.
Json instance_document(const ScenarioConfig& cfg, const Instance& inst);

// printf("%.6g"); "nan" and "inf" spelled out.
std::string format_number(double x);

void write_region_csv(std::ostream& out, std::span<const RegionPoint> points);
void write_coopprob_csv(std::ostream& out, const SweepResult& sweep);
void write_bsweep_csv(std::ostream& out, const SweepResult& sweep);
void write_trace_csv(std::ostream& out, std::span<const TraceEntry> trace);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ehcoop::io
