#include "polarlens.h"

#include <string>

#include <json.hpp>

#include "polarlens/common.hpp"
#include "polarlens/pipeline.hpp"

struct polarlens_session {
  std::string last_error;
  std::string last_manifest;
};

extern "C" {

polarlens_session* polarlens_session_new(void) {
  try {
    return new polarlens_session();
  } catch (...) {
    return nullptr;
  }
}

void polarlens_session_free(polarlens_session* session) { delete session; }

int polarlens_run_stage(polarlens_session* session, const char* stage,
                        const char* config_json) {
  if (!session) return POLARLENS_ERR_VALIDATION;
  session->last_error.clear();
  if (!stage || !config_json) {
    session->last_error = "stage and config_json must be non-null";
    return POLARLENS_ERR_VALIDATION;
  }
  try {
    nlohmann::json cfg = nlohmann::json::parse(config_json, nullptr, false);
    if (cfg.is_discarded()) {
      session->last_error = "config_json is not valid JSON";
      return POLARLENS_ERR_VALIDATION;
    }
    polarlens::StageResult result = polarlens::run_stage(stage, cfg);
    session->last_manifest = result.manifest.dump();
    return POLARLENS_OK;
  } catch (const polarlens::ValidationError& e) {
    session->last_error = e.what();
    return POLARLENS_ERR_VALIDATION;
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return POLARLENS_ERR_RUNTIME;
  } catch (...) {
    session->last_error = "unknown error";
    return POLARLENS_ERR_RUNTIME;
  }
}

const char* polarlens_last_error(const polarlens_session* session) {
  return session ? session->last_error.c_str() : "";
}

const char* polarlens_last_manifest(const polarlens_session* session) {
  return session ? session->last_manifest.c_str() : "";
}

const char* polarlens_stages(void) {
  static const std::string names = [] {
    nlohmann::json j = polarlens::stage_names();
    return j.dump();
  }();
  return names.c_str();
}

const char* polarlens_version(void) { return polarlens::kVersion; }

}  // extern "C"
