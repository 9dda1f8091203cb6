#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "slidetutor/gateway.hpp"
#include "slidetutor/prompts.hpp"

namespace slidetutor {

struct ServiceConfig {
  std::filesystem::path store_dir = "slidetutor-data";
  int k = 3;
  int history_window = 12;
  int max_retries = 2;
  int questions_kept = 1;
  int max_agent_turns = 3;
  std::string language = "English";
  std::string renderer;
  int renderer_timeout_s = 120;
  EndpointConfig planner;
  EndpointConfig tutor;
  /// Scripted gateway fixture; when set no network backend is used.
  std::string fixture;
  std::string bearer_token;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool deterministic_clock = false;
  int workers = 2;
  prompts::CourseInfo course;

  json to_json() const;
};

/// Defaults, then the JSON file when given, then SLIDETUTOR_* environment variables.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file = std::nullopt);
void apply_config_json(ServiceConfig& config, const json& value);
void apply_environment(ServiceConfig& config);

}  // namespace slidetutor
