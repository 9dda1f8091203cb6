#include "slidetutor/teach.hpp"

#include <algorithm>
#include <regex>

#include "slidetutor/error.hpp"

namespace slidetutor {

json to_json(const Utterance& u) {
  json out = {{"speaker", u.speaker}, {"content", u.content}, {"kind", u.kind}, {"timestamp", u.timestamp},
              {"action", u.action}};
  if (!u.payload.is_null()) out["payload"] = u.payload;
  return out;
}

Utterance utterance_from_json(const json& v) {
  try {
    Utterance u;
    u.speaker = v.at("speaker").get<std::string>();
    u.content = v.at("content").get<std::string>();
    u.kind = v.at("kind").get<std::string>();
    u.timestamp = v.at("timestamp").get<std::int64_t>();
    u.action = v.value("action", -1);
    if (v.contains("payload")) u.payload = v["payload"];
    return u;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad utterance: ") + e.what());
  }
}

std::vector<AgentRole> default_roster() {
  return {
      {speaker::kTeacher, "the course teacher; explains content and answers questions about the lesson", "teacher"},
      {speaker::kAssistant,
       "the teaching assistant; adds short clarifications and steers the student back when they drift off topic",
       "teaching_assistant"},
      {speaker::kSystem, "the classroom system; ends the current topic so the lesson moves on", "system"},
  };
}

ControllerDecision parse_decision(std::string_view reply, const std::vector<AgentRole>& roster) {
  std::string s = text::to_lower(reply);
  std::replace(s.begin(), s.end(), ' ', '_');
  std::replace(s.begin(), s.end(), '-', '_');
  std::vector<std::pair<std::string, std::string>> candidates;  // spelling -> choice
  for (const auto& r : roster) {
    candidates.emplace_back(r.name, r.name == speaker::kSystem ? "terminate" : r.name);
  }
  candidates.emplace_back("user", "user");
  candidates.emplace_back("student", "user");
  candidates.emplace_back("terminate", "terminate");

  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  std::string choice;
  for (const auto& [spelling, target] : candidates) {
    std::size_t pos = s.find(spelling);
    if (pos == std::string::npos) continue;
    if (pos < best_pos || (pos == best_pos && spelling.size() > best_len)) {
      best_pos = pos;
      best_len = spelling.size();
      choice = target;
    }
  }
  if (choice.empty()) return {speaker::kTeacher, true};
  return {choice, false};
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Ready: return "ready";
    case Phase::AwaitingUser: return "awaiting_user";
    case Phase::Selecting: return "selecting";
    case Phase::Responding: return "responding";
    case Phase::AwaitingSolution: return "awaiting_solution";
    case Phase::Explaining: return "explaining";
    case Phase::Complete: return "complete";
  }
  return "ready";
}

Phase phase_from_string(const std::string& name) {
  for (Phase p : {Phase::Ready, Phase::AwaitingUser, Phase::Selecting, Phase::Responding, Phase::AwaitingSolution,
                  Phase::Explaining, Phase::Complete}) {
    if (to_string(p) == name) return p;
  }
  throw Error(Errc::SchemaViolation, "unknown phase '" + name + "'");
}

json to_json(const StepRecord& r) {
  return {{"seq", r.seq},         {"step", r.step},         {"action", r.action},     {"calls", r.calls},
          {"request_hash", r.request_hash}, {"decision", r.decision}, {"replayed", r.replayed}};
}

StepRecord step_record_from_json(const json& v) {
  StepRecord r;
  r.seq = v.at("seq").get<std::int64_t>();
  r.step = v.at("step").get<std::string>();
  r.action = v.value("action", -1);
  r.calls = v.at("calls").get<int>();
  r.request_hash = v.value("request_hash", "");
  r.decision = v.value("decision", "");
  r.replayed = v.value("replayed", false);
  return r;
}

bool Session::has_pending_step() const {
  return phase == Phase::Ready || phase == Phase::Selecting || phase == Phase::Responding ||
         phase == Phase::Explaining;
}

namespace {

json course_json(const prompts::CourseInfo& c) {
  return {{"teacher_name", c.teacher_name}, {"course_name", c.course_name}, {"school", c.school},
          {"description", c.description}};
}

prompts::CourseInfo course_from(const json& v) {
  prompts::CourseInfo c;
  c.teacher_name = v.value("teacher_name", c.teacher_name);
  c.course_name = v.value("course_name", "");
  c.school = v.value("school", c.school);
  c.description = v.value("description", "");
  return c;
}

}  // namespace

json to_json(const Session& s) {
  json actions = json::array();
  for (const auto& a : s.actions) actions.push_back(to_json(a));
  json history = json::array();
  for (const auto& u : s.history) history.push_back(to_json(u));
  json log = json::array();
  for (const auto& r : s.step_log) log.push_back(to_json(r));
  json out = {{"session_id", s.session_id},
              {"lecture_id", s.lecture_id},
              {"user_id", s.user_id},
              {"actions", std::move(actions)},
              {"queue_revision", s.queue_revision},
              {"course", course_json(s.course)},
              {"cursor", s.cursor},
              {"phase", to_string(s.phase)},
              {"next_speaker", s.next_speaker},
              {"agent_turns", s.agent_turns},
              {"fallbacks", s.fallbacks},
              {"submission", s.submission},
              {"history", std::move(history)},
              {"step_log", std::move(log)},
              {"step_seq", s.step_seq},
              {"pending_call", nullptr}};
  if (s.pending_call) {
    out["pending_call"] = {{"seq", s.pending_call->seq},
                           {"request_hash", s.pending_call->request_hash},
                           {"completion", s.pending_call->completion}};
  }
  return out;
}

Session session_from_json(const json& v) {
  try {
    Session s;
    s.session_id = v.at("session_id").get<std::string>();
    s.lecture_id = v.at("lecture_id").get<std::string>();
    s.user_id = v.value("user_id", "");
    for (const auto& a : v.at("actions")) s.actions.push_back(action_from_json(a));
    s.queue_revision = v.value("queue_revision", 0);
    s.course = course_from(v.value("course", json::object()));
    s.cursor = v.at("cursor").get<std::size_t>();
    s.phase = phase_from_string(v.at("phase").get<std::string>());
    s.next_speaker = v.value("next_speaker", "");
    s.agent_turns = v.value("agent_turns", 0);
    s.fallbacks = v.value("fallbacks", 0);
    s.submission = v.value("submission", std::vector<int>{});
    for (const auto& u : v.at("history")) s.history.push_back(utterance_from_json(u));
    for (const auto& r : v.at("step_log")) s.step_log.push_back(step_record_from_json(r));
    s.step_seq = v.at("step_seq").get<std::int64_t>();
    if (v.contains("pending_call") && !v["pending_call"].is_null()) {
      const json& p = v["pending_call"];
      s.pending_call = PendingCall{p.at("seq").get<std::int64_t>(), p.at("request_hash").get<std::string>(),
                                   p.at("completion").get<std::string>()};
    }
    if (s.cursor > s.actions.size()) throw Error(Errc::SchemaViolation, "cursor past the end of the queue");
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad session: ") + e.what());
  }
}

ControllerRegistry& ControllerRegistry::global() {
  static ControllerRegistry registry;
  return registry;
}

void ControllerRegistry::add(std::string kind, ExtensionController controller) {
  controllers_[std::move(kind)] = std::move(controller);
}

const ExtensionController* ControllerRegistry::find(const std::string& kind) const {
  auto it = controllers_.find(kind);
  return it == controllers_.end() ? nullptr : &it->second;
}

namespace {

bool builtin(const TeachingAction& a) {
  return a.is(action_kind::kShowFile) || a.is(action_kind::kReadScript) || a.is(action_kind::kAskQuestion);
}

}  // namespace

Session start_session(const LectureHandle& lecture, std::string user_id, std::string session_id) {
  if (!lecture.queue) throw Error(Errc::NoQueue, "lecture " + lecture.lecture_id + " has no action queue");
  for (const auto& a : lecture.queue->actions) {
    if (!builtin(a) && ControllerRegistry::global().find(a.kind) == nullptr) {
      throw Error(Errc::UnsupportedAction, "no controller for action kind '" + a.kind + "'");
    }
  }
  Session s;
  s.session_id = std::move(session_id);
  s.lecture_id = lecture.lecture_id;
  s.user_id = std::move(user_id);
  s.actions = lecture.queue->actions;
  s.queue_revision = lecture.queue->revision;
  s.course = lecture.course;
  s.phase = s.actions.empty() ? Phase::Complete : Phase::Ready;
  return s;
}

std::vector<Utterance> history_window(const std::vector<Utterance>& history, int window) {
  std::vector<Utterance> visible;
  for (const auto& u : history) {
    if (u.speaker != speaker::kSystem && u.kind != utterance_kind::kControl) visible.push_back(u);
  }
  std::size_t keep = static_cast<std::size_t>(std::max(window, 0));
  if (visible.size() > keep) visible.erase(visible.begin(), visible.end() - static_cast<std::ptrdiff_t>(keep));
  return visible;
}

namespace {

ModelRequest controller_request(std::span<const Utterance> history, const std::vector<AgentRole>& roster,
                                const std::string& correlation) {
  std::vector<prompts::RoleLine> lines;
  for (const auto& r : roster) lines.push_back({r.name, r.description});
  auto req = ModelRequest::make(Profile::Tutor, "controller", prompts::controller(lines));
  req.correlation = correlation;
  for (const auto& u : history) req.add(Role::User, u.speaker + ": " + u.content, "history");
  req.add(Role::User, "Who speaks next?", "input");
  return req;
}

std::string letter_list(const std::vector<int>& indices) {
  std::vector<std::string> out;
  for (int i : indices) out.push_back(std::string(1, static_cast<char>('A' + i)));
  return text::join(out, ", ");
}

std::string explain_context(const QAItem& qa, const std::vector<int>& submission, bool correct) {
  std::string out = "The student is answering this question:\n" + qa.question + "\nOptions:\n";
  for (std::size_t i = 0; i < qa.options.size(); ++i) {
    out += std::string(1, static_cast<char>('A' + i)) + ". " + qa.options[i] + "\n";
  }
  out += "Correct answer: " + letter_list(qa.answer) + "\n";
  out += "The student chose: " + letter_list(submission) + ", which is " + (correct ? "correct" : "incorrect") + ".\n";
  out += "Tell the student whether they were right and explain the correct answer briefly.";
  return out;
}

const AgentRole& role_named(const std::string& name) {
  static const std::vector<AgentRole> roster = default_roster();
  for (const auto& r : roster) {
    if (r.name == name) return r;
  }
  throw Error(Errc::InvalidRequest, "no agent named '" + name + "'");
}

}  // namespace

ControllerDecision select_speaker(std::span<const Utterance> history, const std::vector<AgentRole>& roster,
                                  Gateway& gateway, const std::string& correlation) {
  return parse_decision(gateway.complete(controller_request(history, roster, correlation)).text, roster);
}

ModelRequest agent_request(const AgentRole& role, std::span<const Utterance> history, const std::string& injected,
                           const prompts::CourseInfo& course) {
  std::string system;
  if (role.prompt_template == "teacher") {
    system = prompts::teacher(course, injected);
  } else if (role.prompt_template == "teaching_assistant") {
    system = prompts::teaching_assistant(course);
    if (!injected.empty()) system += "\n\n" + injected;
  } else {
    system = role.description;
  }
  auto req = ModelRequest::make(Profile::Tutor, injected.empty() ? "agent:" + role.name : "explain", system);
  for (const auto& u : history) {
    if (u.speaker == role.name) {
      req.add(Role::Assistant, u.content, "history");
    } else {
      std::string who = u.speaker == speaker::kUser ? "Student" : u.speaker;
      req.add(Role::User, who + ": " + u.content, "history");
    }
  }
  req.add(Role::User, "Reply as the " + role.name + ".", "input");
  return req;
}

Utterance agent_respond(const AgentRole& role, std::span<const Utterance> history, const std::string& injected,
                        Gateway& gateway, const prompts::CourseInfo& course, const std::string& correlation) {
  auto req = agent_request(role, history, injected, course);
  req.correlation = correlation;
  std::string out = text::trim(gateway.complete(req).text);
  if (out.empty()) throw Error(Errc::EmptyCompletion, role.name + " returned nothing");
  return {role.name, out, injected.empty() ? utterance_kind::kSay : utterance_kind::kExplanation, 0, -1, nullptr};
}

bool grade_answer(const QAItem& qa, const std::vector<int>& submission) {
  std::vector<int> s = submission;
  for (int i : s) {
    if (i < 0 || i >= static_cast<int>(qa.options.size())) {
      throw Error(Errc::BadIndex, "option " + std::to_string(i) + " does not exist");
    }
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<int> a = qa.answer;
  std::sort(a.begin(), a.end());
  return s == a;
}

UserEvent user_event_from_json(const json& v) {
  try {
    UserEvent e;
    std::string type = v.at("type").get<std::string>();
    if (type == "say") {
      e.type = UserEvent::Type::Say;
      e.text = v.at("text").get<std::string>();
    } else if (type == "choose") {
      e.type = UserEvent::Type::Choose;
      e.options = v.at("options").get<std::vector<int>>();
    } else if (type == "continue") {
      e.type = UserEvent::Type::Continue;
    } else {
      throw Error(Errc::InvalidRequest, "unknown event type '" + type + "'");
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(Errc::InvalidRequest, std::string("bad event: ") + ex.what());
  }
}

json to_json(const UserEvent& e) {
  switch (e.type) {
    case UserEvent::Type::Say: return {{"type", "say"}, {"text", e.text}};
    case UserEvent::Type::Choose: return {{"type", "choose"}, {"options", e.options}};
    case UserEvent::Type::Continue: return {{"type", "continue"}};
  }
  return nullptr;
}

namespace {

std::int64_t stamp(const Session& s, const EngineConfig& config) {
  if (config.deterministic_clock) return config.clock_base_ms + static_cast<std::int64_t>(s.history.size()) * 1000;
  auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
  return s.history.empty() ? now : std::max<std::int64_t>(now, s.history.back().timestamp);
}

void advance(Session& s) {
  ++s.cursor;
  s.phase = s.cursor >= s.actions.size() ? Phase::Complete : Phase::Ready;
  s.next_speaker.clear();
  s.agent_turns = 0;
  s.fallbacks = 0;
  s.submission.clear();
}

std::vector<Utterance> commit(Session& s, StepRecord record, std::vector<Utterance> events, const EngineConfig& config,
                              const Persist& persist) {
  for (auto& u : events) {
    u.timestamp = stamp(s, config);
    if (u.action < 0) u.action = record.action;
    s.history.push_back(u);
  }
  s.step_log.push_back(std::move(record));
  ++s.step_seq;
  s.pending_call.reset();
  if (persist) persist(s);
  return events;
}

/// Issues the step's model call, or replays the journaled result if this exact
/// step already made it before a crash.
std::string call_once(Session& s, Gateway& gateway, ModelRequest req, StepRecord& record, bool allow_empty,
                      const Persist& persist) {
  req.correlation = s.session_id;
  std::string hash = request_hash(req);
  record.calls = 1;
  record.request_hash = hash;
  if (s.pending_call && s.pending_call->seq == s.step_seq && s.pending_call->request_hash == hash) {
    record.replayed = true;
    return s.pending_call->completion;
  }
  std::string out = text::trim(gateway.complete(req).text);
  if (out.empty() && !allow_empty) throw Error(Errc::EmptyCompletion, req.purpose + " returned nothing");
  s.pending_call = PendingCall{s.step_seq, hash, out};
  if (persist) persist(s);
  return out;
}

}  // namespace

std::vector<Utterance> submit_user_event(Session& s, const UserEvent& event, const EngineConfig& config,
                                         const Persist& persist) {
  StepRecord record;
  record.seq = s.step_seq;
  record.step = "user_event";
  record.action = static_cast<int>(s.cursor);
  std::vector<Utterance> events;
  auto user = [&](std::string content, const char* kind, json payload = nullptr) {
    events.push_back({speaker::kUser, std::move(content), kind, 0, -1, std::move(payload)});
  };

  if (s.phase == Phase::AwaitingUser) {
    switch (event.type) {
      case UserEvent::Type::Say: {
        std::string t = text::trim(event.text);
        if (t.empty()) throw Error(Errc::InvalidRequest, "empty message");
        user(t, utterance_kind::kSay);
        s.phase = Phase::Selecting;
        s.agent_turns = 0;
        s.fallbacks = 0;
        record.decision = "say";
        break;
      }
      case UserEvent::Type::Continue:
        user("continue", utterance_kind::kControl);
        advance(s);
        record.decision = "continue";
        break;
      case UserEvent::Type::Choose:
        throw Error(Errc::NotAwaitingInput, "no question is open");
    }
  } else if (s.phase == Phase::AwaitingSolution) {
    switch (event.type) {
      case UserEvent::Type::Choose: {
        const QAItem& qa = s.actions[s.cursor].question();
        if (event.options.empty()) throw Error(Errc::InvalidRequest, "no option chosen");
        grade_answer(qa, event.options);  // bounds check
        std::vector<int> chosen = event.options;
        std::sort(chosen.begin(), chosen.end());
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
        user(letter_list(chosen), utterance_kind::kSay, json{{"options", chosen}});
        s.submission = chosen;
        s.phase = Phase::Explaining;
        record.decision = "choose";
        break;
      }
      case UserEvent::Type::Continue:
        user("continue", utterance_kind::kControl);
        advance(s);
        record.decision = "continue";
        break;
      case UserEvent::Type::Say:
        throw Error(Errc::NotAwaitingInput, "waiting for an answer to the question");
    }
  } else {
    throw Error(Errc::NotAwaitingInput, "session is " + to_string(s.phase));
  }
  return commit(s, std::move(record), std::move(events), config, persist);
}

std::vector<Utterance> run_step(Session& s, Gateway& gateway, const EngineConfig& config, const Persist& persist) {
  if (!s.has_pending_step()) return {};
  StepRecord record;
  record.seq = s.step_seq;
  record.action = static_cast<int>(s.cursor);
  std::vector<Utterance> events;
  // Mutations go to a copy so a failed call leaves the caller's session as it was.
  Session next = s;

  switch (next.phase) {
    case Phase::Ready: {
      if (next.cursor >= next.actions.size()) {
        next.phase = Phase::Complete;
        record.step = "finish";
        break;
      }
      const TeachingAction& a = next.actions[next.cursor];
      if (a.is(action_kind::kShowFile)) {
        record.step = "show_file";
        events.push_back({speaker::kSystem, "page " + std::to_string(a.page()), utterance_kind::kShowPage, 0, -1,
                          json{{"page", a.page()}}});
        advance(next);
      } else if (a.is(action_kind::kReadScript)) {
        record.step = "read_script";
        events.push_back({speaker::kTeacher, a.script(), utterance_kind::kSay, 0, -1, nullptr});
        next.phase = Phase::AwaitingUser;
        next.agent_turns = 0;
        next.fallbacks = 0;
      } else if (a.is(action_kind::kAskQuestion)) {
        record.step = "ask_question";
        const QAItem& qa = a.question();
        events.push_back({speaker::kTeacher, qa.question, utterance_kind::kPostQuestion, 0, -1,
                          json{{"question_type", to_string(qa.question_type)}, {"options", qa.options}}});
        next.phase = Phase::AwaitingSolution;
      } else {
        const ExtensionController* ctrl = ControllerRegistry::global().find(a.kind);
        if (ctrl == nullptr) throw Error(Errc::UnsupportedAction, "no controller for '" + a.kind + "'");
        record.step = "extension";
        for (auto u : (*ctrl)(a)) {
          if (u.speaker.empty()) u.speaker = speaker::kSystem;
          if (u.kind.empty()) u.kind = utterance_kind::kControl;
          events.push_back(std::move(u));
        }
        advance(next);
      }
      break;
    }
    case Phase::Selecting: {
      record.step = "select";
      if (next.agent_turns >= config.max_agent_turns) {
        record.decision = "user";
        next.phase = Phase::AwaitingUser;
        break;
      }
      auto roster = default_roster();
      auto window = history_window(next.history, config.history_window);
      std::string reply = call_once(next, gateway, controller_request(window, roster, next.session_id), record,
                                    true, persist ? Persist([&](const Session& x) { persist(x); s = x; }) : Persist{});
      ControllerDecision d = parse_decision(reply, roster);
      record.decision = d.fallback ? "fallback:" + d.choice : d.choice;
      if (d.fallback) {
        if (++next.fallbacks >= 2) {
          record.decision = "fallback:terminate";
          advance(next);
          break;
        }
      } else {
        next.fallbacks = 0;
      }
      if (d.choice == "terminate") {
        advance(next);
      } else if (d.choice == speaker::kUser) {
        next.phase = Phase::AwaitingUser;
      } else {
        next.next_speaker = d.choice;
        next.phase = Phase::Responding;
      }
      break;
    }
    case Phase::Responding: {
      record.step = "respond";
      const AgentRole& role = role_named(next.next_speaker);
      auto window = history_window(next.history, config.history_window);
      std::string reply = call_once(next, gateway, agent_request(role, window, "", next.course), record, false,
                                    persist ? Persist([&](const Session& x) { persist(x); s = x; }) : Persist{});
      record.decision = role.name;
      events.push_back({role.name, reply, utterance_kind::kSay, 0, -1, nullptr});
      ++next.agent_turns;
      next.next_speaker.clear();
      next.phase = Phase::Selecting;
      break;
    }
    case Phase::Explaining: {
      record.step = "explain";
      const QAItem& qa = next.actions[next.cursor].question();
      bool correct = grade_answer(qa, next.submission);
      auto window = history_window(next.history, config.history_window);
      std::string injected = explain_context(qa, next.submission, correct);
      std::string reply =
          call_once(next, gateway, agent_request(role_named(speaker::kTeacher), window, injected, next.course),
                    record, false, persist ? Persist([&](const Session& x) { persist(x); s = x; }) : Persist{});
      record.decision = correct ? "correct" : "incorrect";
      events.push_back({speaker::kTeacher, reply, utterance_kind::kExplanation, 0, -1,
                        json{{"correct", correct}, {"answer", qa.answer}}});
      advance(next);
      break;
    }
    default:
      return {};
  }
  auto out = commit(next, std::move(record), std::move(events), config, persist);
  s = std::move(next);
  return out;
}

void MemorySessionStore::save(const Session& session) {
  std::lock_guard lock(mu_);
  sessions_[session.session_id] = to_json(session);
}

std::optional<Session> MemorySessionStore::load(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return session_from_json(it->second);
}

namespace {

void check_id(const std::string& id) {
  static const std::regex ok("[A-Za-z0-9_.-]{1,128}");
  if (!std::regex_match(id, ok) || id == "." || id == "..") throw Error(Errc::InvalidRequest, "bad id '" + id + "'");
}

}  // namespace

FileSessionStore::FileSessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FileSessionStore::path_for(const std::string& session_id) const {
  check_id(session_id);
  return dir_ / (session_id + ".json");
}

void FileSessionStore::save(const Session& session) {
  fsutil::write_atomic(path_for(session.session_id), to_json(session).dump());
}

std::optional<Session> FileSessionStore::load(const std::string& session_id) const {
  auto path = path_for(session_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return session_from_json(json::parse(fsutil::read_text(path)));
}

Session resume_session(const SessionStore& store, const std::string& session_id) {
  auto s = store.load(session_id);
  if (!s) throw Error(Errc::UnknownSession, "no session '" + session_id + "'");
  return std::move(*s);
}

json transcript(const Session& session) {
  json out = json::array();
  for (std::size_t i = 0; i < session.history.size(); ++i) {
    json e = to_json(session.history[i]);
    e["seq"] = i;
    out.push_back(std::move(e));
  }
  return out;
}

void StepQueue::enqueue(std::string session_id, std::string step_kind) {
  {
    std::lock_guard lock(mu_);
    tickets_.push_back({next_id_++, std::move(session_id), std::move(step_kind)});
  }
  cv_.notify_all();
}

std::optional<StepQueue::Ticket> StepQueue::lease(std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  std::optional<Ticket> got;
  auto ready = [&] {
    if (closed_) return true;
    for (auto it = tickets_.begin(); it != tickets_.end(); ++it) {
      if (!leased_.count(it->session_id)) {
        got = *it;
        tickets_.erase(it);
        return true;
      }
    }
    return false;
  };
  cv_.wait_for(lock, wait, ready);
  if (got) leased_.insert(got->session_id);
  return got;
}

void StepQueue::ack(const Ticket& ticket) {
  {
    std::lock_guard lock(mu_);
    leased_.erase(ticket.session_id);
  }
  cv_.notify_all();
}

void StepQueue::retry(const Ticket& ticket) {
  {
    std::lock_guard lock(mu_);
    leased_.erase(ticket.session_id);
    tickets_.push_front(ticket);
  }
  cv_.notify_all();
}

void StepQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t StepQueue::size() const {
  std::lock_guard lock(mu_);
  return tickets_.size();
}

bool StepQueue::idle() const {
  std::lock_guard lock(mu_);
  return tickets_.empty() && leased_.empty();
}

bool StepQueue::leased(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return leased_.count(session_id) > 0;
}

ScriptedUser::ScriptedUser(json events) : events_(std::move(events)) {
  if (!events_.is_array()) throw Error(Errc::InvalidRequest, "scripted user needs an event array");
}

UserEvent ScriptedUser::next(const Session& session) const {
  std::size_t said = static_cast<std::size_t>(std::count_if(session.history.begin(), session.history.end(),
                                                            [](const Utterance& u) { return u.speaker == "user"; }));
  if (said < events_.size()) return user_event_from_json(events_[said]);
  return UserEvent{};
}

}  // namespace slidetutor
