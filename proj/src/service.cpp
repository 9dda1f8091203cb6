#include "slidetutor/service.hpp"

#include <iostream>
#include <random>

#include "slidetutor/error.hpp"

namespace slidetutor {

namespace {

constexpr LectureStatus kStatuses[] = {LectureStatus::Ingested, LectureStatus::Described, LectureStatus::Segmented,
                                       LectureStatus::Planned, LectureStatus::Published};

std::string random_id(const std::string& prefix) {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return prefix + std::string(buf, 12);
}

struct LeaseGuard {
  std::function<void()> release;
  ~LeaseGuard() {
    if (release) release();
  }
};

}  // namespace

std::string to_string(LectureStatus status) {
  switch (status) {
    case LectureStatus::Ingested: return "ingested";
    case LectureStatus::Described: return "described";
    case LectureStatus::Segmented: return "segmented";
    case LectureStatus::Planned: return "planned";
    case LectureStatus::Published: return "published";
  }
  return "ingested";
}

LectureStatus lecture_status_from_string(const std::string& name) {
  for (auto s : kStatuses) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::SchemaViolation, "unknown lecture status '" + name + "'");
}

json to_json(const LectureRecord& r) {
  return {{"lecture_id", r.lecture_id}, {"title", r.title},           {"status", to_string(r.status)},
          {"deck_ref", r.deck_ref},     {"agenda_ref", r.agenda_ref}, {"queue_ref", r.queue_ref},
          {"planning", r.planning},     {"planning_error", r.planning_error}, {"progress", r.progress}};
}

LectureRecord lecture_from_json(const json& v) {
  try {
    LectureRecord r;
    r.lecture_id = v.at("lecture_id").get<std::string>();
    r.title = v.at("title").get<std::string>();
    r.status = lecture_status_from_string(v.at("status").get<std::string>());
    r.deck_ref = v.at("deck_ref").get<std::string>();
    r.agenda_ref = v.value("agenda_ref", "");
    r.queue_ref = v.value("queue_ref", "");
    r.planning = v.value("planning", "idle");
    if (r.planning != "idle" && r.planning != "running" && r.planning != "failed") {
      throw Error(Errc::SchemaViolation, "bad planning state '" + r.planning + "'");
    }
    r.planning_error = v.value("planning_error", "");
    r.progress = v.value("progress", json::object());
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad lecture record: ") + e.what());
  }
}

std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config, std::optional<std::filesystem::path> cursor_file,
                                      std::shared_ptr<CallLog> log) {
  if (!log) log = std::make_shared<CallLog>(config.store_dir / "calls.ndjson");
  std::shared_ptr<Backend> backend;
  if (!config.fixture.empty()) {
    backend = ScriptedBackend::from_file(config.fixture, std::move(cursor_file));
  } else {
    backend = std::make_shared<HttpBackend>(
        std::map<Profile, EndpointConfig>{{Profile::Planner, config.planner}, {Profile::Tutor, config.tutor}});
  }
  return std::make_shared<Gateway>(backend, RetryPolicy{}, log);
}

Service::Service(ServiceConfig config, std::shared_ptr<Gateway> gateway)
    : config_(std::move(config)), gateway_(std::move(gateway)) {
  if (!gateway_) throw Error(Errc::InvalidRequest, "service needs a gateway");
  store_ = std::make_unique<FileDocumentStore>(config_.store_dir);
  install_validators(*store_);
  sessions_ = std::make_unique<DocumentSessionStore>(*store_);
  // A plan marked running belongs to a process that no longer exists.
  for (const auto& id : store_->list("lectures")) {
    LectureRecord r = lecture(id);
    if (r.planning == "running") {
      r.planning = "idle";
      save_lecture(r);
    }
  }
}

Service::~Service() {
  stop_workers();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(plan_threads_);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
}

EngineConfig Service::engine_config() const {
  EngineConfig e;
  e.history_window = config_.history_window;
  e.max_agent_turns = config_.max_agent_turns;
  e.deterministic_clock = config_.deterministic_clock;
  e.language = config_.language;
  return e;
}

void Service::save_lecture(const LectureRecord& record) { store_->put("lectures", record.lecture_id, to_json(record)); }

void Service::advance_status(LectureRecord& record, LectureStatus status) {
  if (static_cast<int>(status) > static_cast<int>(record.status)) record.status = status;
}

LectureRecord Service::lecture(const std::string& lecture_id) const {
  check_document_id(lecture_id);
  auto doc = store_->get("lectures", lecture_id);
  if (!doc) throw Error(Errc::UnknownLecture, "no lecture '" + lecture_id + "'");
  return lecture_from_json(*doc);
}

LectureRecord Service::upload_lecture(const Bytes& archive, const std::string& title,
                                      std::optional<std::string> lecture_id) {
  std::string id = lecture_id.value_or(random_id("lec-"));
  check_document_id(id);
  if (store_->get("lectures", id)) throw Error(Errc::Conflict, "lecture '" + id + "' already exists");
  SlideDeck deck = parse_deck(archive, title);
  if (config_.renderer.empty()) throw Error(Errc::RendererFailed, "no renderer configured");

  auto dir = config_.store_dir / "blobs" / id;
  std::filesystem::create_directories(dir);
  auto archive_path = dir / "source.pptx";
  fsutil::write_atomic(archive_path, std::string_view(reinterpret_cast<const char*>(archive.data()), archive.size()));
  RendererConfig renderer{config_.renderer, std::chrono::seconds(config_.renderer_timeout_s), 1024};
  deck = rasterize_deck(std::move(deck), archive_path, renderer, dir / "images");
  store_->put("decks", id, deck_to_json(deck));

  LectureRecord r;
  r.lecture_id = id;
  r.title = deck.title;
  r.status = LectureStatus::Ingested;
  r.deck_ref = "decks/" + id;
  r.progress = {{"pages", deck.pages.size()}};
  save_lecture(r);
  return r;
}

SlideDeck Service::deck(const std::string& lecture_id) const {
  check_document_id(lecture_id);
  auto doc = store_->get("decks", lecture_id);
  if (!doc) throw Error(Errc::UnknownLecture, "no deck for lecture '" + lecture_id + "'");
  return deck_from_json(*doc, config_.store_dir / "blobs" / lecture_id);
}

Agenda Service::agenda(const std::string& lecture_id) const {
  lecture(lecture_id);
  auto doc = store_->get("agendas", lecture_id);
  if (!doc) throw Error(Errc::Conflict, "lecture '" + lecture_id + "' has no agenda yet");
  return agenda_from_json(*doc);
}

ActionQueue Service::actions(const std::string& lecture_id) const {
  lecture(lecture_id);
  auto doc = store_->get("queues", lecture_id);
  if (!doc) throw Error(Errc::NoQueue, "lecture '" + lecture_id + "' has no action queue yet");
  return queue_from_json(*doc);
}

void Service::acquire_plan_lease(const std::string& lecture_id) {
  std::lock_guard lock(mu_);
  if (!planning_.insert(lecture_id).second) {
    throw Error(Errc::Conflict, "planning already running for '" + lecture_id + "'");
  }
}

void Service::release_plan_lease(const std::string& lecture_id) {
  {
    std::lock_guard lock(mu_);
    planning_.erase(lecture_id);
  }
  plan_cv_.notify_all();
}

void Service::plan_body(const std::string& id, const std::function<void()>& checkpoint) {
  LectureRecord rec = lecture(id);
  if (static_cast<int>(rec.status) >= static_cast<int>(LectureStatus::Planned)) return;
  SlideDeck d = deck(id);
  const std::size_t pages = d.pages.size();
  auto tick = [&] {
    save_lecture(rec);
    if (checkpoint) checkpoint();
  };
  rec.planning = "running";
  rec.planning_error.clear();
  save_lecture(rec);

  Agenda built;
  if (auto doc = store_->get("agendas", id); doc && rec.status == LectureStatus::Segmented) {
    built = agenda_from_json(*doc);
  } else {
    AgendaConfig ac;
    ac.k = config_.k;
    ac.max_retries = config_.max_retries;
    ac.language = config_.language;
    ac.correlation = id;
    AgendaProgress progress;
    if (auto saved = store_->get("agenda_progress", id)) progress = agenda_progress_from_json(*saved);
    built = build_agenda(d, *gateway_, ac, progress, [&](const AgendaProgress& p) {
      store_->put("agenda_progress", id, to_json(p));
      rec.progress["described"] = p.descriptions.size();
      rec.progress["segmented"] = p.segmented;
      rec.progress["fallback_pages"] = p.fallback_pages;
      if (p.descriptions_done(pages)) advance_status(rec, LectureStatus::Described);
      tick();
    });
    store_->put("agendas", id, to_json(built));
    rec.agenda_ref = "agendas/" + id;
    advance_status(rec, LectureStatus::Segmented);
    tick();
  }

  PlannerConfig pc;
  pc.k = config_.k;
  pc.questions_kept = config_.questions_kept;
  pc.language = config_.language;
  pc.lecture_id = id;
  pc.correlation = id;
  PlanProgress progress;
  if (auto saved = store_->get("plan_progress", id)) progress = plan_progress_from_json(*saved);
  ActionQueue queue = compile_queue(built, d, *gateway_, pc, progress, [&](const PlanProgress& p) {
    store_->put("plan_progress", id, to_json(p));
    rec.progress["scripted"] = p.scripts.size();
    rec.progress["question_sections"] = p.questions.size();
    tick();
  });
  store_->put("queues", id, to_json(queue));
  store_->put("agendas", id, to_json(built));
  rec.queue_ref = "queues/" + id;
  rec.planning = "idle";
  advance_status(rec, LectureStatus::Planned);
  save_lecture(rec);
}

LectureRecord Service::plan_now(const std::string& lecture_id, const std::function<void()>& checkpoint) {
  lecture(lecture_id);
  acquire_plan_lease(lecture_id);
  LeaseGuard guard{[&] { release_plan_lease(lecture_id); }};
  try {
    plan_body(lecture_id, checkpoint);
  } catch (const Error& e) {
    LectureRecord r = lecture(lecture_id);
    r.planning = "failed";
    r.planning_error = e.what();
    save_lecture(r);
    throw;
  }
  return lecture(lecture_id);
}

LectureRecord Service::generate_plan(const std::string& lecture_id) {
  LectureRecord r = lecture(lecture_id);
  acquire_plan_lease(lecture_id);
  if (static_cast<int>(r.status) < static_cast<int>(LectureStatus::Planned)) {
    r.planning = "running";
    save_lecture(r);
  }
  std::lock_guard lock(mu_);
  plan_threads_.emplace_back([this, lecture_id] {
    LeaseGuard guard{[&] { release_plan_lease(lecture_id); }};
    try {
      plan_body(lecture_id, {});
    } catch (const std::exception& e) {
      try {
        LectureRecord failed = lecture(lecture_id);
        failed.planning = "failed";
        failed.planning_error = e.what();
        save_lecture(failed);
      } catch (const std::exception& inner) {
        std::cerr << "slidetutor: could not record planning failure: " << inner.what() << "\n";
      }
    }
  });
  return r;
}

LectureRecord Service::wait_for_plan(const std::string& lecture_id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  plan_cv_.wait_for(lock, timeout, [&] { return planning_.count(lecture_id) == 0; });
  lock.unlock();
  return lecture(lecture_id);
}

LectureRecord Service::publish(const std::string& lecture_id) {
  LectureRecord r = lecture(lecture_id);
  if (static_cast<int>(r.status) < static_cast<int>(LectureStatus::Planned)) {
    throw Error(Errc::Conflict, "lecture '" + lecture_id + "' is not planned");
  }
  advance_status(r, LectureStatus::Published);
  save_lecture(r);
  return r;
}

ActionQueue Service::update_actions(const std::string& lecture_id, int expected_revision,
                                    const std::vector<QueueEdit>& edits) {
  std::shared_ptr<std::mutex> m;
  {
    std::lock_guard lock(mu_);
    auto& slot = lecture_locks_[lecture_id];
    if (!slot) slot = std::make_shared<std::mutex>();
    m = slot;
  }
  std::lock_guard lock(*m);
  ActionQueue current = actions(lecture_id);
  if (current.revision != expected_revision) {
    throw Error(Errc::StaleRevision, "queue is at revision " + std::to_string(current.revision) + ", not " +
                                         std::to_string(expected_revision));
  }
  int pages = static_cast<int>(deck(lecture_id).pages.size());
  ActionQueue next = revise_queue(current, edits, pages);
  store_->put("queues", lecture_id, to_json(next));
  return next;
}

std::shared_ptr<std::mutex> Service::session_lock(const std::string& session_id) {
  std::lock_guard lock(mu_);
  auto& slot = session_locks_[session_id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void Service::notify_session() {
  {
    std::lock_guard lock(events_mu_);
    ++events_version_;
  }
  events_cv_.notify_all();
}

Session Service::create_session(const std::string& lecture_id, const std::string& user_id,
                                std::optional<std::string> session_id) {
  LectureRecord r = lecture(lecture_id);
  if (static_cast<int>(r.status) < static_cast<int>(LectureStatus::Planned)) {
    throw Error(Errc::NoQueue, "lecture '" + lecture_id + "' is not planned yet");
  }
  std::string id = session_id.value_or(random_id("ses-"));
  check_document_id(id);
  auto lock = session_lock(id);
  std::lock_guard guard(*lock);
  if (sessions_->load(id)) throw Error(Errc::Conflict, "session '" + id + "' already exists");
  LectureHandle handle{lecture_id, actions(lecture_id), config_.course};
  handle.course.course_name = r.title;
  Session s = start_session(handle, user_id, id);
  sessions_->save(s);
  if (!workers_.empty() && s.has_pending_step()) steps_.enqueue(id, "step");
  return s;
}

Session Service::session(const std::string& session_id) const {
  check_document_id(session_id);
  return resume_session(*sessions_, session_id);
}

std::vector<Utterance> Service::post_event(const std::string& session_id, const UserEvent& event) {
  auto lock = session_lock(session_id);
  std::vector<Utterance> out;
  bool pending = false;
  {
    std::lock_guard guard(*lock);
    Session s = session(session_id);
    out = submit_user_event(s, event, engine_config(), [&](const Session& x) { sessions_->save(x); });
    pending = s.has_pending_step();
  }
  notify_session();
  if (pending && !workers_.empty()) steps_.enqueue(session_id, "step");
  return out;
}

bool Service::step_once(const std::string& session_id) {
  auto lock = session_lock(session_id);
  bool more = false;
  {
    std::lock_guard guard(*lock);
    Session s = session(session_id);
    if (!s.has_pending_step()) return false;
    run_step(s, *gateway_, engine_config(), [&](const Session& x) { sessions_->save(x); });
    more = s.has_pending_step();
  }
  notify_session();
  return more;
}

Session Service::drive(const std::string& session_id, std::optional<int> max_steps) {
  int done = 0;
  while (!max_steps || done < *max_steps) {
    if (!step_once(session_id)) break;
    ++done;
  }
  return session(session_id);
}

std::vector<std::pair<std::size_t, Utterance>> Service::events_since(const std::string& session_id, std::size_t from,
                                                                    std::chrono::milliseconds wait) {
  auto deadline = std::chrono::steady_clock::now() + wait;
  while (true) {
    std::uint64_t version;
    {
      std::lock_guard lock(events_mu_);
      version = events_version_;
    }
    Session s = session(session_id);
    if (s.history.size() > from || s.complete() || std::chrono::steady_clock::now() >= deadline) {
      std::vector<std::pair<std::size_t, Utterance>> out;
      for (std::size_t i = from; i < s.history.size(); ++i) out.emplace_back(i, s.history[i]);
      return out;
    }
    std::unique_lock lock(events_mu_);
    events_cv_.wait_until(lock, deadline, [&] { return events_version_ != version; });
  }
}

void Service::start_workers(int count) {
  if (!workers_.empty()) return;
  stopping_ = false;
  for (int i = 0; i < std::max(count, 1); ++i) workers_.emplace_back([this] { worker_loop(); });
  // Sessions interrupted mid-step by a restart pick up where they stopped.
  for (const auto& id : store_->list("sessions")) {
    if (session(id).has_pending_step()) steps_.enqueue(id, "resume");
  }
}

void Service::stop_workers() {
  stopping_ = true;
  steps_.close();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  workers_.clear();
}

void Service::worker_loop() {
  while (!stopping_) {
    auto ticket = steps_.lease(std::chrono::milliseconds(200));
    if (!ticket) continue;
    ++running_steps_;
    bool more = false;
    try {
      more = step_once(ticket->session_id);
    } catch (const std::exception& e) {
      std::cerr << "slidetutor: step for " << ticket->session_id << " failed: " << e.what() << "\n";
    }
    if (more) steps_.enqueue(ticket->session_id, "step");
    steps_.ack(*ticket);
    --running_steps_;
  }
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (steps_.idle()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return false;
}

}  // namespace slidetutor
