#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "slidetutor/actions.hpp"
#include "slidetutor/gateway.hpp"
#include "slidetutor/prompts.hpp"

namespace slidetutor {

namespace speaker {
inline constexpr const char* kUser = "user";
inline constexpr const char* kTeacher = "teacher";
inline constexpr const char* kAssistant = "teaching_assistant";
inline constexpr const char* kSystem = "system";
}  // namespace speaker

namespace utterance_kind {
inline constexpr const char* kSay = "say";
inline constexpr const char* kShowPage = "show_page";
inline constexpr const char* kPostQuestion = "post_question";
inline constexpr const char* kExplanation = "explanation";
inline constexpr const char* kControl = "control";
}  // namespace utterance_kind

struct Utterance {
  std::string speaker;
  std::string content;
  std::string kind;
  std::int64_t timestamp = 0;
  /// Queue position of the action that produced it.
  int action = -1;
  json payload;

  bool operator==(const Utterance&) const = default;
};

json to_json(const Utterance& u);
Utterance utterance_from_json(const json& value);

struct AgentRole {
  std::string name;
  std::string description;
  std::string prompt_template;
};

std::vector<AgentRole> default_roster();

struct ControllerDecision {
  /// A roster name, "user" or "terminate".
  std::string choice;
  bool fallback = false;
};

/// Maps free model text onto a decision; anything unrecognized falls back to the teacher.
ControllerDecision parse_decision(std::string_view reply, const std::vector<AgentRole>& roster);

enum class Phase {
  Ready,             // next action not started
  AwaitingUser,      // script delivered, student may talk or continue
  Selecting,         // controller picks the next speaker
  Responding,        // chosen agent speaks
  AwaitingSolution,  // question posted
  Explaining,        // answer submitted, teacher explains
  Complete,
};

std::string to_string(Phase phase);
Phase phase_from_string(const std::string& name);

struct StepRecord {
  std::int64_t seq = 0;
  std::string step;
  int action = -1;
  int calls = 0;
  std::string request_hash;
  std::string decision;
  bool replayed = false;
};

json to_json(const StepRecord& r);
StepRecord step_record_from_json(const json& value);

/// A model call whose result is journaled before the step that issued it commits.
struct PendingCall {
  std::int64_t seq = 0;
  std::string request_hash;
  std::string completion;
};

struct Session {
  std::string session_id;
  std::string lecture_id;
  std::string user_id;
  /// Pinned copy of the queue the session was started with.
  std::vector<TeachingAction> actions;
  int queue_revision = 0;
  prompts::CourseInfo course;

  std::size_t cursor = 0;
  Phase phase = Phase::Ready;
  std::string next_speaker;
  int agent_turns = 0;
  int fallbacks = 0;
  std::vector<int> submission;
  std::vector<Utterance> history;
  std::vector<StepRecord> step_log;
  std::int64_t step_seq = 0;
  std::optional<PendingCall> pending_call;

  bool complete() const { return phase == Phase::Complete; }
  /// True when run_step has work to do; false while waiting for the student or when done.
  bool has_pending_step() const;
};

json to_json(const Session& s);
Session session_from_json(const json& value);

struct EngineConfig {
  int history_window = 12;
  int max_agent_turns = 3;
  /// Timestamps derived from session state instead of the wall clock (replayable runs).
  bool deterministic_clock = false;
  std::int64_t clock_base_ms = 1'700'000'000'000;
  std::string language = "English";
};

/// Extension kinds: a controller that turns the action into utterances without model calls.
using ExtensionController = std::function<std::vector<Utterance>(const TeachingAction&)>;

class ControllerRegistry {
 public:
  static ControllerRegistry& global();
  void add(std::string kind, ExtensionController controller);
  const ExtensionController* find(const std::string& kind) const;

 private:
  std::map<std::string, ExtensionController> controllers_;
};

struct LectureHandle {
  std::string lecture_id;
  std::optional<ActionQueue> queue;
  prompts::CourseInfo course;
};

Session start_session(const LectureHandle& lecture, std::string user_id, std::string session_id);

/// Last `window` utterances the agents may see (system utterances and control events excluded).
std::vector<Utterance> history_window(const std::vector<Utterance>& history, int window);

ControllerDecision select_speaker(std::span<const Utterance> history, const std::vector<AgentRole>& roster,
                                  Gateway& gateway, const std::string& correlation = {});

ModelRequest agent_request(const AgentRole& role, std::span<const Utterance> history, const std::string& injected,
                           const prompts::CourseInfo& course);

Utterance agent_respond(const AgentRole& role, std::span<const Utterance> history, const std::string& injected,
                        Gateway& gateway, const prompts::CourseInfo& course, const std::string& correlation = {});

/// Exact-set grading.
bool grade_answer(const QAItem& qa, const std::vector<int>& submission);

struct UserEvent {
  enum class Type { Say, Choose, Continue };
  Type type = Type::Continue;
  std::string text;
  std::vector<int> options;
};

UserEvent user_event_from_json(const json& value);
json to_json(const UserEvent& e);

using Persist = std::function<void(const Session&)>;

/// Appends the event to history and moves the session on. Throws NotAwaitingInput or BadIndex.
std::vector<Utterance> submit_user_event(Session& session, const UserEvent& event, const EngineConfig& config = {},
                                         const Persist& persist = {});

/// Executes one micro-step with at most one gateway call. A failed call leaves the session untouched.
std::vector<Utterance> run_step(Session& session, Gateway& gateway, const EngineConfig& config = {},
                                const Persist& persist = {});

class SessionStore {
 public:
  virtual ~SessionStore() = default;
  virtual void save(const Session& session) = 0;
  virtual std::optional<Session> load(const std::string& session_id) const = 0;
};

class MemorySessionStore : public SessionStore {
 public:
  void save(const Session& session) override;
  std::optional<Session> load(const std::string& session_id) const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, json> sessions_;
};

class FileSessionStore : public SessionStore {
 public:
  explicit FileSessionStore(std::filesystem::path dir);
  void save(const Session& session) override;
  std::optional<Session> load(const std::string& session_id) const override;
  std::filesystem::path path_for(const std::string& session_id) const;

 private:
  std::filesystem::path dir_;
};

Session resume_session(const SessionStore& store, const std::string& session_id);

json transcript(const Session& session);

/// In-process step queue with one lease per session at a time.
class StepQueue {
 public:
  struct Ticket {
    std::uint64_t id = 0;
    std::string session_id;
    std::string step_kind;
  };

  void enqueue(std::string session_id, std::string step_kind = "step");
  /// Next ticket whose session is not leased; waits up to `wait`.
  std::optional<Ticket> lease(std::chrono::milliseconds wait);
  void ack(const Ticket& ticket);
  /// Releases the lease and puts the ticket back at the front.
  void retry(const Ticket& ticket);
  void close();
  std::size_t size() const;
  bool leased(const std::string& session_id) const;
  /// Nothing queued and nothing leased.
  bool idle() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Ticket> tickets_;
  std::set<std::string> leased_;
  std::uint64_t next_id_ = 1;
  bool closed_ = false;
};

/// Scripted student: events consumed in order, one per prompt for input; "continue" once exhausted.
class ScriptedUser {
 public:
  explicit ScriptedUser(json events);
  UserEvent next(const Session& session) const;

 private:
  json events_;
};

}  // namespace slidetutor
