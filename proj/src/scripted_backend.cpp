#include "slidetutor/error.hpp"
#include "slidetutor/gateway.hpp"

namespace slidetutor {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::AssertionFailed, where + ": " + what);
}

bool matches(const json& when, const ModelRequest& request) {
  if (when.contains("profile") && when["profile"].get<std::string>() != to_string(request.profile)) return false;
  if (when.contains("purpose") && when["purpose"].get<std::string>() != request.purpose) return false;
  return true;
}

}  // namespace

ScriptedBackend::ScriptedBackend(json fixture, std::optional<std::filesystem::path> cursor_file)
    : fixture_(std::move(fixture)), cursor_file_(std::move(cursor_file)) {
  if (!fixture_.is_object() || !fixture_.contains("scenarios") || !fixture_["scenarios"].is_object()) {
    throw Error(Errc::InvalidRequest, "scripted fixture needs a 'scenarios' object");
  }
  if (cursor_file_ && std::filesystem::exists(*cursor_file_)) {
    json saved = json::parse(fsutil::read_text(*cursor_file_));
    for (const auto& [scenario, n] : saved.items()) cursors_[scenario] = n.get<std::size_t>();
  }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path,
                                                            std::optional<std::filesystem::path> cursor_file) {
  json fixture;
  try {
    fixture = json::parse(fsutil::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidRequest, path.string() + ": " + e.what());
  }
  // Fixtures for full simulations nest the gateway script under "gateway".
  if (fixture.contains("gateway")) fixture = fixture["gateway"];
  return std::make_shared<ScriptedBackend>(std::move(fixture), std::move(cursor_file));
}

void ScriptedBackend::check(const json& expect, const ModelRequest& request, const std::string& where) const {
  if (expect.contains("profile") && expect["profile"].get<std::string>() != to_string(request.profile)) {
    fail(where, "expected profile " + expect["profile"].get<std::string>() + ", got " + to_string(request.profile));
  }
  const std::string all = request.all_text();
  if (expect.contains("contains")) {
    for (const auto& s : expect["contains"]) {
      if (all.find(s.get<std::string>()) == std::string::npos) fail(where, "request lacks '" + s.get<std::string>() + "'");
    }
  }
  if (expect.contains("not_contains")) {
    for (const auto& s : expect["not_contains"]) {
      if (all.find(s.get<std::string>()) != std::string::npos) {
        fail(where, "request unexpectedly contains '" + s.get<std::string>() + "'");
      }
    }
  }
  if (expect.contains("system_contains")) {
    const std::string& system = request.messages.front().text;
    for (const auto& s : expect["system_contains"]) {
      if (system.find(s.get<std::string>()) == std::string::npos) {
        fail(where, "system prompt lacks '" + s.get<std::string>() + "'");
      }
    }
  }
  if (expect.contains("tagged")) {
    for (const auto& [tag, n] : expect["tagged"].items()) {
      auto got = request.count_tagged(tag);
      if (got != n.get<std::size_t>()) {
        fail(where, "expected " + std::to_string(n.get<std::size_t>()) + " '" + tag + "' messages, got " +
                        std::to_string(got));
      }
    }
  }
  if (expect.contains("max_tagged")) {
    for (const auto& [tag, n] : expect["max_tagged"].items()) {
      auto got = request.count_tagged(tag);
      if (got > n.get<std::size_t>()) {
        fail(where, "expected at most " + std::to_string(n.get<std::size_t>()) + " '" + tag + "' messages, got " +
                        std::to_string(got));
      }
    }
  }
  if (expect.contains("images")) {
    std::size_t images = 0;
    for (const auto& m : request.messages) images += m.images.size();
    if (images != expect["images"].get<std::size_t>()) {
      fail(where, "expected " + std::to_string(expect["images"].get<std::size_t>()) + " images, got " +
                      std::to_string(images));
    }
  }
  if (expect.contains("messages") && request.messages.size() != expect["messages"].get<std::size_t>()) {
    fail(where, "expected " + std::to_string(expect["messages"].get<std::size_t>()) + " messages, got " +
                    std::to_string(request.messages.size()));
  }
}

ModelCompletion ScriptedBackend::send(const ModelRequest& request, std::chrono::milliseconds) {
  std::lock_guard lock(mu_);
  const std::string& scenario = request.purpose;
  const json& scenarios = fixture_["scenarios"];
  std::size_t& cursor = cursors_[scenario];
  if (!scenarios.contains(scenario) || cursor >= scenarios[scenario].size()) {
    throw Error(Errc::FixtureExhausted, "no scripted response left for scenario '" + scenario + "' (served " +
                                            std::to_string(cursor) + ")");
  }
  const json& entry = scenarios[scenario][cursor];
  std::string where = scenario + "[" + std::to_string(cursor) + "]";

  if (fixture_.contains("expect_all")) {
    for (const auto& rule : fixture_["expect_all"]) {
      if (matches(rule.value("when", json::object()), request)) check(rule.at("expect"), request, where);
    }
  }

  ModelCompletion completion;
  if (entry.is_string()) {
    completion.text = entry.get<std::string>();
  } else {
    if (entry.contains("expect")) check(entry["expect"], request, where);
    if (entry.contains("error")) {
      // Lets fixtures simulate backend failures; the entry is consumed either way.
      ++cursor;
      std::string code = entry["error"].get<std::string>();
      Errc errc = code == "timeout" ? Errc::Timeout
                  : code == "rejected" ? Errc::BackendRejected
                                       : Errc::TransientBackend;
      throw Error(errc, "scripted failure at " + where);
    }
    completion.text = entry.value("text", "");
    completion.finish_reason = entry.value("finish_reason", "stop");
    if (entry.contains("usage")) {
      completion.usage.prompt_tokens = entry["usage"].value("prompt_tokens", 0);
      completion.usage.completion_tokens = entry["usage"].value("completion_tokens", 0);
    }
  }
  if (completion.usage.completion_tokens == 0) {
    completion.usage.completion_tokens = static_cast<int>(text::utf8_length(completion.text) / 4);
  }
  ++cursor;
  if (cursor_file_) {
    json saved = json::object();
    for (const auto& [name, n] : cursors_) saved[name] = n;
    fsutil::write_atomic(*cursor_file_, saved.dump());
  }
  return completion;
}

std::map<std::string, std::size_t> ScriptedBackend::cursors() const {
  std::lock_guard lock(mu_);
  return cursors_;
}

std::size_t ScriptedBackend::remaining(const std::string& scenario) const {
  std::lock_guard lock(mu_);
  const json& scenarios = fixture_["scenarios"];
  if (!scenarios.contains(scenario)) return 0;
  auto it = cursors_.find(scenario);
  std::size_t used = it == cursors_.end() ? 0 : it->second;
  return scenarios[scenario].size() - std::min(used, scenarios[scenario].size());
}

std::size_t ScriptedBackend::served() const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& [_, n] : cursors_) total += n;
  return total;
}

}  // namespace slidetutor
