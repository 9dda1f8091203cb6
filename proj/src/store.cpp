#include "slidetutor/store.hpp"

#include <algorithm>
#include <regex>

#include "slidetutor/agenda.hpp"
#include "slidetutor/error.hpp"
#include "slidetutor/ingest.hpp"
#include "slidetutor/planner.hpp"
#include "slidetutor/service.hpp"

namespace slidetutor {

void check_document_id(const std::string& id) {
  static const std::regex ok("[A-Za-z0-9_-][A-Za-z0-9_.-]{0,127}");
  if (!std::regex_match(id, ok)) throw Error(Errc::InvalidRequest, "bad id '" + id + "'");
}

void DocumentStore::set_validator(const std::string& collection, Validator validator) {
  validators_[collection] = std::move(validator);
}

void DocumentStore::validate(const std::string& collection, const json& doc) const {
  auto it = validators_.find(collection);
  if (it == validators_.end()) return;
  try {
    it->second(doc);
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaViolation) throw;
    throw Error(Errc::SchemaViolation, collection + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, collection + ": " + e.what());
  }
}

FileDocumentStore::FileDocumentStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path FileDocumentStore::document_path(const std::string& collection, const std::string& id) const {
  check_document_id(collection);
  check_document_id(id);
  return root_ / collection / (id + ".json");
}

std::optional<json> FileDocumentStore::get(const std::string& collection, const std::string& id) const {
  auto path = document_path(collection, id);
  std::string body;
  {
    std::lock_guard lock(mu_);
    if (!std::filesystem::exists(path)) return std::nullopt;
    body = fsutil::read_text(path);
  }
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
  validate(collection, doc);
  return doc;
}

void FileDocumentStore::put(const std::string& collection, const std::string& id, const json& doc) {
  validate(collection, doc);
  auto path = document_path(collection, id);
  std::string body = doc.dump(2);
  std::lock_guard lock(mu_);
  fsutil::write_atomic(path, body);
}

std::vector<std::string> FileDocumentStore::list(const std::string& collection) const {
  check_document_id(collection);
  std::vector<std::string> out;
  std::lock_guard lock(mu_);
  auto dir = root_ / collection;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void install_validators(DocumentStore& store) {
  store.set_validator("lectures", [](const json& v) { lecture_from_json(v); });
  store.set_validator("decks", [](const json& v) {
    SlideDeck d = deck_from_json(v);
    for (std::size_t i = 0; i < d.pages.size(); ++i) {
      if (d.pages[i].index != static_cast<int>(i)) throw Error(Errc::SchemaViolation, "page indices out of order");
    }
  });
  store.set_validator("agendas", [](const json& v) { agenda_from_json(v); });
  store.set_validator("queues", [](const json& v) {
    if (auto p = queue_problem(queue_from_json(v))) throw Error(Errc::SchemaViolation, *p);
  });
  store.set_validator("sessions", [](const json& v) { session_from_json(v); });
  store.set_validator("agenda_progress", [](const json& v) { agenda_progress_from_json(v); });
  store.set_validator("plan_progress", [](const json& v) { plan_progress_from_json(v); });
}

void DocumentSessionStore::save(const Session& session) { store_.put("sessions", session.session_id, to_json(session)); }

std::optional<Session> DocumentSessionStore::load(const std::string& session_id) const {
  auto doc = store_.get("sessions", session_id);
  if (!doc) return std::nullopt;
  return session_from_json(*doc);
}

}  // namespace slidetutor
