#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace slidetutor {

using json = nlohmann::json;

namespace action_kind {
inline constexpr std::string_view kShowFile = "ShowFile";
inline constexpr std::string_view kReadScript = "ReadScript";
inline constexpr std::string_view kAskQuestion = "AskQuestion";
}  // namespace action_kind

enum class QuestionType { SingleChoice, MultipleChoice };

std::string to_string(QuestionType type);
QuestionType question_type_from_string(const std::string& name);

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 6;

struct QAItem {
  std::string question;
  QuestionType question_type = QuestionType::SingleChoice;
  std::vector<std::string> options;
  /// Sorted, unique option indices.
  std::vector<int> answer;
  std::optional<std::string> reference;

  bool operator==(const QAItem&) const = default;
};

/// Returns a description of the first violated QAItem invariant, if any.
std::optional<std::string> qa_problem(const QAItem& item);

json to_json(const QAItem& item);
QAItem qa_from_json(const json& value);

struct ShowFileValue {
  int page_index = 0;
  bool operator==(const ShowFileValue&) const = default;
};

struct ReadScriptValue {
  std::string script;
  bool operator==(const ReadScriptValue&) const = default;
};

/// Extension kinds keep their payload as raw JSON.
using ActionValue = std::variant<ShowFileValue, ReadScriptValue, QAItem, json>;

struct TeachingAction {
  std::string kind;
  ActionValue value;
  std::string origin_leaf;

  static TeachingAction show_file(int page_index, std::string leaf);
  static TeachingAction read_script(std::string script, std::string leaf);
  static TeachingAction ask_question(QAItem item, std::string leaf);

  bool is(std::string_view k) const { return kind == k; }
  int page() const;
  const std::string& script() const;
  const QAItem& question() const;

  bool operator==(const TeachingAction&) const = default;
};

json to_json(const TeachingAction& action);
TeachingAction action_from_json(const json& value);

/// Registry of extension action kinds with their payload validators. Kinds that
/// are not registered are still carried through serialization and revision.
class ActionKindRegistry {
 public:
  using Validator = std::function<std::optional<std::string>(const json&)>;

  static ActionKindRegistry& global();

  void add(std::string kind, Validator validator);
  bool known(const std::string& kind) const;
  std::optional<std::string> check(const std::string& kind, const json& value) const;

 private:
  std::map<std::string, Validator> validators_;
};

struct ActionQueue {
  std::string lecture_id;
  std::vector<TeachingAction> actions;
  int revision = 1;

  bool operator==(const ActionQueue&) const = default;
};

/// Checks ordering and payload invariants. `page_count` bounds ShowFile references when known.
std::optional<std::string> queue_problem(const ActionQueue& queue, std::optional<int> page_count = std::nullopt);

json to_json(const ActionQueue& queue);
ActionQueue queue_from_json(const json& value);

struct QueueEdit {
  enum class Op { Insert, Remove, Replace };
  Op op = Op::Replace;
  std::size_t position = 0;
  std::optional<TeachingAction> action;
};

QueueEdit edit_from_json(const json& value);

/// Applies all edits to a copy, revalidates, and bumps the revision. Nothing is
/// applied when any edit is out of range or the result breaks an invariant.
ActionQueue revise_queue(const ActionQueue& queue, const std::vector<QueueEdit>& edits,
                         std::optional<int> page_count = std::nullopt);

}  // namespace slidetutor
