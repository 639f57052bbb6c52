#pragma once
// Stage orchestration: every pipeline stage runs from a JSON config, writes
// its artifacts plus a manifest (input hashes, effective config, version)
// that makes reruns exact. The C API and the CLI both sit on run_stage.

#include <string>
#include <vector>

#include <json.hpp>

#include "polarlens/common.hpp"

namespace polarlens {

inline constexpr const char* kVersion = "1.0.0";

struct StageResult {
  std::vector<std::string> outputs;  // files or directories written
  nlohmann::json manifest;
  std::string manifest_path;
};

// Canonical stage names: synth, ingest, score, graph, lpa, features_bow,
// features_lda, features_embed, train, classify, analyze, report.
const std::vector<std::string>& stage_names();

// Runs one stage. ValidationError for bad config or missing inputs (the
// message names the producer stage to run first); std::runtime_error for
// runtime failures.
StageResult run_stage(const std::string& stage, const nlohmann::json& config);

// `key = value` config file; keys may be namespaced ("score.q"). Keys for
// `stage` (both bare and namespaced forms) merge into a JSON config; explicit
// flags are expected to override afterwards.
nlohmann::json kv_config_for_stage(const std::string& path, const std::string& stage);

}  // namespace polarlens
