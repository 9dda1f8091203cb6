#include "slidetutor/config.hpp"

#include <cstdlib>

#include "slidetutor/error.hpp"
#include "slidetutor/util.hpp"

namespace slidetutor {

namespace {

json endpoint_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url}, {"path", e.path}, {"model", e.model}, {"api_key", e.api_key.empty() ? "" : "***"}};
}

void read_endpoint(EndpointConfig& e, const json& v) {
  e.base_url = v.value("base_url", e.base_url);
  e.path = v.value("path", e.path);
  e.api_key = v.value("api_key", e.api_key);
  e.model = v.value("model", e.model);
}

int parse_int(const char* name, const char* value, int lo, int hi) {
  try {
    std::size_t used = 0;
    int n = std::stoi(value, &used);
    if (used != std::string(value).size() || n < lo || n > hi) throw std::out_of_range(name);
    return n;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidRequest, std::string(name) + " must be an integer in [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
  }
}

}  // namespace

json ServiceConfig::to_json() const {
  return {{"store_dir", store_dir.string()},
          {"k", k},
          {"history_window", history_window},
          {"max_retries", max_retries},
          {"questions_kept", questions_kept},
          {"max_agent_turns", max_agent_turns},
          {"language", language},
          {"renderer", renderer},
          {"renderer_timeout_s", renderer_timeout_s},
          {"planner", endpoint_json(planner)},
          {"tutor", endpoint_json(tutor)},
          {"fixture", fixture},
          {"host", host},
          {"port", port},
          {"deterministic_clock", deterministic_clock},
          {"workers", workers}};
}

void apply_config_json(ServiceConfig& c, const json& v) {
  if (!v.is_object()) throw Error(Errc::InvalidRequest, "config must be a JSON object");
  if (v.contains("store_dir")) c.store_dir = v["store_dir"].get<std::string>();
  c.k = v.value("k", c.k);
  c.history_window = v.value("history_window", c.history_window);
  c.max_retries = v.value("max_retries", c.max_retries);
  c.questions_kept = v.value("questions_kept", c.questions_kept);
  c.max_agent_turns = v.value("max_agent_turns", c.max_agent_turns);
  c.language = v.value("language", c.language);
  c.renderer = v.value("renderer", c.renderer);
  c.renderer_timeout_s = v.value("renderer_timeout_s", c.renderer_timeout_s);
  if (v.contains("planner")) read_endpoint(c.planner, v["planner"]);
  if (v.contains("tutor")) read_endpoint(c.tutor, v["tutor"]);
  c.fixture = v.value("fixture", c.fixture);
  c.bearer_token = v.value("bearer_token", c.bearer_token);
  c.host = v.value("host", c.host);
  c.port = v.value("port", c.port);
  c.deterministic_clock = v.value("deterministic_clock", c.deterministic_clock);
  c.workers = v.value("workers", c.workers);
  if (v.contains("course")) {
    const json& course = v["course"];
    c.course.teacher_name = course.value("teacher_name", c.course.teacher_name);
    c.course.school = course.value("school", c.course.school);
    c.course.description = course.value("description", c.course.description);
  }
  if (c.questions_kept < 1 || c.questions_kept > 3) throw Error(Errc::InvalidRequest, "questions_kept must be 1-3");
  if (c.k < 0) throw Error(Errc::InvalidRequest, "k must not be negative");
}

void apply_environment(ServiceConfig& c) {
  auto env = [](const char* name) -> const char* {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? v : nullptr;
  };
  if (auto v = env("SLIDETUTOR_STORE")) c.store_dir = v;
  if (auto v = env("SLIDETUTOR_K")) c.k = parse_int("SLIDETUTOR_K", v, 0, 64);
  if (auto v = env("SLIDETUTOR_H")) c.history_window = parse_int("SLIDETUTOR_H", v, 0, 1000);
  if (auto v = env("SLIDETUTOR_R")) c.max_retries = parse_int("SLIDETUTOR_R", v, 0, 20);
  if (auto v = env("SLIDETUTOR_QUESTIONS_KEPT")) c.questions_kept = parse_int("SLIDETUTOR_QUESTIONS_KEPT", v, 1, 3);
  if (auto v = env("SLIDETUTOR_RENDERER")) c.renderer = v;
  if (auto v = env("SLIDETUTOR_PLANNER_URL")) c.planner.base_url = v;
  if (auto v = env("SLIDETUTOR_PLANNER_KEY")) c.planner.api_key = v;
  if (auto v = env("SLIDETUTOR_PLANNER_MODEL")) c.planner.model = v;
  if (auto v = env("SLIDETUTOR_TUTOR_URL")) c.tutor.base_url = v;
  if (auto v = env("SLIDETUTOR_TUTOR_KEY")) c.tutor.api_key = v;
  if (auto v = env("SLIDETUTOR_TUTOR_MODEL")) c.tutor.model = v;
  if (auto v = env("SLIDETUTOR_FIXTURE")) c.fixture = v;
  if (auto v = env("SLIDETUTOR_TOKEN")) c.bearer_token = v;
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file) {
  ServiceConfig c;
  if (file) {
    try {
      apply_config_json(c, json::parse(fsutil::read_text(*file)));
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidRequest, file->string() + ": " + e.what());
    }
  }
  apply_environment(c);
  return c;
}

}  // namespace slidetutor
