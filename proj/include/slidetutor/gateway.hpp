#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "slidetutor/util.hpp"

namespace slidetutor {

using json = nlohmann::json;

enum class Profile { Planner, Tutor };
enum class Role { System, User, Assistant };

std::string to_string(Profile profile);
Profile profile_from_string(const std::string& name);
std::string to_string(Role role);

struct ImagePart {
  std::string mime = "image/png";
  Bytes data;
  /// When set, sent by reference instead of inline base64.
  std::string url;
};

struct Message {
  Role role = Role::User;
  std::string text;
  std::vector<ImagePart> images;
  /// Local bookkeeping ("history", "context", "input", ...); never sent on the wire.
  std::string tag;
};

/// Sampling parameters; unset fields are omitted from the wire request.
struct SamplingParams {
  std::optional<double> frequency_penalty;
  std::optional<json> logit_bias;
  std::optional<bool> logprobs;
  std::optional<int> max_tokens;
  std::optional<int> n;
  std::optional<double> presence_penalty;
  std::optional<json> stop;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<bool> do_sample;
};

json to_json(const SamplingParams& params);

/// Planner profile: pre-class generation. Tutor profile: in-class interaction.
SamplingParams profile_defaults(Profile profile);

struct ModelRequest {
  Profile profile = Profile::Planner;
  std::vector<Message> messages;
  SamplingParams params;
  /// Which generator issued the call ("describe", "segment", "controller", ...).
  std::string purpose;
  /// Deck, lecture or session the call belongs to; used to slice the call log.
  std::string correlation;

  static ModelRequest make(Profile profile, std::string purpose, std::string system_prompt);
  ModelRequest& add(Role role, std::string text, std::string tag = {});
  std::size_t count_tagged(std::string_view tag) const;
  std::string all_text() const;
};

inline constexpr std::size_t kMaxImageBytes = 4u * 1024u * 1024u;

/// Enforces: exactly one system message and it comes first; images only on user messages.
void validate(const ModelRequest& request);

/// Content hash over the canonical request (images contribute their digest).
std::string request_hash(const ModelRequest& request);
json request_summary(const ModelRequest& request);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ModelCompletion {
  std::string text;
  std::string finish_reason = "stop";
  Usage usage;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelCompletion send(const ModelRequest& request, std::chrono::milliseconds timeout) = 0;
  virtual std::string name() const = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

struct CallRecord {
  std::int64_t timestamp_ms = 0;
  Profile profile = Profile::Planner;
  std::string purpose;
  std::string correlation;
  std::string request_hash;
  std::string status;
  int attempts = 0;
  Usage usage;
  std::string finish_reason;
  json request;
  std::string response;
};

json to_json(const CallRecord& record);

/// Append-only, totally ordered record of every gateway call.
class CallLog {
 public:
  explicit CallLog(std::optional<std::filesystem::path> file = std::nullopt, bool keep_bodies = true);

  void append(CallRecord record);
  std::vector<CallRecord> records() const;
  std::vector<CallRecord> records_for(const std::string& correlation) const;
  std::size_t size() const;
  bool keeps_bodies() const { return keep_bodies_; }

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  bool keep_bodies_;
  std::vector<CallRecord> records_;
};

/// The only way the rest of the system talks to a model.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy = {},
          std::shared_ptr<CallLog> log = std::make_shared<CallLog>(), int max_in_flight = 8);

  ModelCompletion complete(const ModelRequest& request);

  CallLog& log() { return *log_; }
  std::shared_ptr<CallLog> shared_log() const { return log_; }
  Backend& backend() { return *backend_; }
  const RetryPolicy& policy() const { return policy_; }

 private:
  std::shared_ptr<Backend> backend_;
  RetryPolicy policy_;
  std::shared_ptr<CallLog> log_;
  std::counting_semaphore<1024> in_flight_;
};

/// Deterministic fixture-driven backend. Responses are served per scenario
/// (the request purpose) in sequence; entries may assert on request shape.
///
/// Fixture layout:
///   {"scenarios": {"describe": ["text", {"text": "...", "expect": {...}}, ...], ...},
///    "expect_all": [{"when": {"profile": "tutor"}, "expect": {...}}]}
///
/// Expectation keys: profile, contains, not_contains, system_contains,
/// tagged {tag: n}, max_tagged {tag: n}, images, messages.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(json fixture, std::optional<std::filesystem::path> cursor_file = std::nullopt);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path,
                                                    std::optional<std::filesystem::path> cursor_file = std::nullopt);

  ModelCompletion send(const ModelRequest& request, std::chrono::milliseconds timeout) override;
  std::string name() const override { return "scripted"; }

  std::map<std::string, std::size_t> cursors() const;
  std::size_t remaining(const std::string& scenario) const;
  std::size_t served() const;

 private:
  void check(const json& expect, const ModelRequest& request, const std::string& where) const;

  mutable std::mutex mu_;
  json fixture_;
  std::optional<std::filesystem::path> cursor_file_;
  std::map<std::string, std::size_t> cursors_;
};

struct EndpointConfig {
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model;
};

/// Generic JSON chat-completion client (messages array, image parts as data URLs).
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::map<Profile, EndpointConfig> endpoints);

  ModelCompletion send(const ModelRequest& request, std::chrono::milliseconds timeout) override;
  std::string name() const override { return "http"; }

  static json wire_body(const ModelRequest& request, const EndpointConfig& endpoint);
  static ModelCompletion parse_reply(const std::string& body);

  /// Process-wide count of outbound connection attempts.
  static std::uint64_t connection_attempts();

 private:
  std::map<Profile, EndpointConfig> endpoints_;
  static std::atomic<std::uint64_t> connection_attempts_;
};

}  // namespace slidetutor
