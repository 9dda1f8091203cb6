#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slidetutor/teach.hpp"

namespace slidetutor {

/// Collection/id keyed JSON documents. Documents pass their collection's
/// validator on every write and read.
class DocumentStore {
 public:
  using Validator = std::function<void(const json&)>;

  virtual ~DocumentStore() = default;
  virtual std::optional<json> get(const std::string& collection, const std::string& id) const = 0;
  virtual void put(const std::string& collection, const std::string& id, const json& doc) = 0;
  virtual std::vector<std::string> list(const std::string& collection) const = 0;

  void set_validator(const std::string& collection, Validator validator);

 protected:
  void validate(const std::string& collection, const json& doc) const;

 private:
  std::map<std::string, Validator> validators_;
};

class FileDocumentStore : public DocumentStore {
 public:
  explicit FileDocumentStore(std::filesystem::path root);

  std::optional<json> get(const std::string& collection, const std::string& id) const override;
  void put(const std::string& collection, const std::string& id, const json& doc) override;
  std::vector<std::string> list(const std::string& collection) const override;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path document_path(const std::string& collection, const std::string& id) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
};

/// Installs validators for lectures, decks, agendas, queues and sessions.
void install_validators(DocumentStore& store);

/// Session persistence on top of a document store ("sessions" collection).
class DocumentSessionStore : public SessionStore {
 public:
  explicit DocumentSessionStore(DocumentStore& store) : store_(store) {}
  void save(const Session& session) override;
  std::optional<Session> load(const std::string& session_id) const override;

 private:
  DocumentStore& store_;
};

void check_document_id(const std::string& id);

}  // namespace slidetutor
