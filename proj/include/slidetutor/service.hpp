#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "slidetutor/agenda.hpp"
#include "slidetutor/config.hpp"
#include "slidetutor/gateway.hpp"
#include "slidetutor/planner.hpp"
#include "slidetutor/store.hpp"
#include "slidetutor/teach.hpp"

namespace slidetutor {

enum class LectureStatus { Ingested, Described, Segmented, Planned, Published };

std::string to_string(LectureStatus status);
LectureStatus lecture_status_from_string(const std::string& name);

struct LectureRecord {
  std::string lecture_id;
  std::string title;
  LectureStatus status = LectureStatus::Ingested;
  std::string deck_ref;
  std::string agenda_ref;
  std::string queue_ref;
  /// idle | running | failed
  std::string planning = "idle";
  std::string planning_error;
  json progress = json::object();
};

json to_json(const LectureRecord& r);
LectureRecord lecture_from_json(const json& value);

/// Builds the gateway described by the config: scripted when a fixture is set, HTTP otherwise.
std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config, std::optional<std::filesystem::path> cursor_file,
                                      std::shared_ptr<CallLog> log = nullptr);

class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<Gateway> gateway);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }
  DocumentStore& store() { return *store_; }
  Gateway& gateway() { return *gateway_; }

  LectureRecord upload_lecture(const Bytes& archive, const std::string& title,
                               std::optional<std::string> lecture_id = std::nullopt);
  LectureRecord lecture(const std::string& lecture_id) const;

  /// Starts planning in the background. Throws Conflict when a plan is already running.
  LectureRecord generate_plan(const std::string& lecture_id);
  /// Plans in the calling thread; `checkpoint` runs after every persisted progress update.
  LectureRecord plan_now(const std::string& lecture_id, const std::function<void()>& checkpoint = {});
  /// Blocks until no plan is running for the lecture.
  LectureRecord wait_for_plan(const std::string& lecture_id, std::chrono::milliseconds timeout);
  LectureRecord publish(const std::string& lecture_id);

  SlideDeck deck(const std::string& lecture_id) const;
  Agenda agenda(const std::string& lecture_id) const;
  ActionQueue actions(const std::string& lecture_id) const;
  ActionQueue update_actions(const std::string& lecture_id, int expected_revision, const std::vector<QueueEdit>& edits);

  Session create_session(const std::string& lecture_id, const std::string& user_id,
                         std::optional<std::string> session_id = std::nullopt);
  Session session(const std::string& session_id) const;
  std::vector<Utterance> post_event(const std::string& session_id, const UserEvent& event);
  /// Runs pending steps inline until the session waits for input or completes.
  Session drive(const std::string& session_id, std::optional<int> max_steps = std::nullopt);
  /// Events with seq >= from; waits up to `wait` for at least one when none are available.
  std::vector<std::pair<std::size_t, Utterance>> events_since(const std::string& session_id, std::size_t from,
                                                             std::chrono::milliseconds wait);

  /// Background step workers; without them sessions advance only through drive().
  void start_workers(int count);
  void stop_workers();
  /// Waits until no step is queued or running.
  bool wait_idle(std::chrono::milliseconds timeout);

  EngineConfig engine_config() const;

 private:
  std::shared_ptr<std::mutex> session_lock(const std::string& session_id);
  void save_lecture(const LectureRecord& record);
  void advance_status(LectureRecord& record, LectureStatus status);
  void plan_body(const std::string& lecture_id, const std::function<void()>& checkpoint);
  void acquire_plan_lease(const std::string& lecture_id);
  void release_plan_lease(const std::string& lecture_id);
  bool step_once(const std::string& session_id);
  void worker_loop();
  void notify_session();

  ServiceConfig config_;
  std::shared_ptr<Gateway> gateway_;
  std::unique_ptr<FileDocumentStore> store_;
  std::unique_ptr<DocumentSessionStore> sessions_;

  mutable std::mutex mu_;
  std::condition_variable plan_cv_;
  std::set<std::string> planning_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
  std::map<std::string, std::shared_ptr<std::mutex>> lecture_locks_;
  std::vector<std::thread> plan_threads_;

  std::mutex events_mu_;
  std::condition_variable events_cv_;
  std::uint64_t events_version_ = 0;

  StepQueue steps_;
  std::vector<std::thread> workers_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> running_steps_{0};
};

}  // namespace slidetutor
