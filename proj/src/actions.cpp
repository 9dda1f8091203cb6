#include "slidetutor/actions.hpp"

#include <algorithm>
#include <map>

#include "slidetutor/error.hpp"
#include "slidetutor/util.hpp"

namespace slidetutor {

std::string to_string(QuestionType type) {
  return type == QuestionType::SingleChoice ? "single_choice" : "multiple_choice";
}

QuestionType question_type_from_string(const std::string& name) {
  std::string n = text::to_lower(name);
  std::replace(n.begin(), n.end(), '-', '_');
  std::replace(n.begin(), n.end(), ' ', '_');
  if (n == "single_choice") return QuestionType::SingleChoice;
  if (n == "multiple_choice") return QuestionType::MultipleChoice;
  throw Error(Errc::SchemaViolation, "unknown question_type '" + name + "'");
}

std::optional<std::string> qa_problem(const QAItem& item) {
  if (text::trim(item.question).empty()) return "empty question";
  if (item.options.size() < kMinOptions || item.options.size() > kMaxOptions) {
    return "question has " + std::to_string(item.options.size()) + " options";
  }
  for (const auto& o : item.options) {
    if (text::trim(o).empty()) return "empty option";
  }
  if (item.answer.empty()) return "no answer";
  int n = static_cast<int>(item.options.size());
  for (std::size_t i = 0; i < item.answer.size(); ++i) {
    if (item.answer[i] < 0 || item.answer[i] >= n) return "answer index out of range";
    if (i > 0 && item.answer[i] <= item.answer[i - 1]) return "answer indices must be sorted and unique";
  }
  if (item.question_type == QuestionType::SingleChoice && item.answer.size() != 1) {
    return "single_choice question with " + std::to_string(item.answer.size()) + " answers";
  }
  return std::nullopt;
}

json to_json(const QAItem& item) {
  json out = {{"question", item.question},
              {"question_type", to_string(item.question_type)},
              {"options", item.options},
              {"answer", item.answer}};
  if (item.reference) out["reference"] = *item.reference;
  return out;
}

QAItem qa_from_json(const json& value) {
  try {
    QAItem item;
    item.question = value.at("question").get<std::string>();
    item.question_type = question_type_from_string(value.at("question_type").get<std::string>());
    item.options = value.at("options").get<std::vector<std::string>>();
    item.answer = value.at("answer").get<std::vector<int>>();
    if (value.contains("reference") && !value["reference"].is_null()) {
      item.reference = value["reference"].get<std::string>();
    }
    return item;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad question: ") + e.what());
  }
}

TeachingAction TeachingAction::show_file(int page_index, std::string leaf) {
  return {std::string(action_kind::kShowFile), ShowFileValue{page_index}, std::move(leaf)};
}

TeachingAction TeachingAction::read_script(std::string script, std::string leaf) {
  return {std::string(action_kind::kReadScript), ReadScriptValue{std::move(script)}, std::move(leaf)};
}

TeachingAction TeachingAction::ask_question(QAItem item, std::string leaf) {
  return {std::string(action_kind::kAskQuestion), std::move(item), std::move(leaf)};
}

int TeachingAction::page() const { return std::get<ShowFileValue>(value).page_index; }
const std::string& TeachingAction::script() const { return std::get<ReadScriptValue>(value).script; }
const QAItem& TeachingAction::question() const { return std::get<QAItem>(value); }

json to_json(const TeachingAction& action) {
  json value = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ShowFileValue>) {
          return {{"file_id", v.page_index}};
        } else if constexpr (std::is_same_v<T, ReadScriptValue>) {
          return {{"script", v.script}};
        } else if constexpr (std::is_same_v<T, QAItem>) {
          return to_json(v);
        } else {
          return v;
        }
      },
      action.value);
  return {{"kind", action.kind}, {"value", std::move(value)}, {"origin_leaf", action.origin_leaf}};
}

TeachingAction action_from_json(const json& value) {
  try {
    std::string kind = value.at("kind").get<std::string>();
    const json& v = value.at("value");
    std::string leaf = value.value("origin_leaf", "");
    if (kind == action_kind::kShowFile) return TeachingAction::show_file(v.at("file_id").get<int>(), leaf);
    if (kind == action_kind::kReadScript) return TeachingAction::read_script(v.at("script").get<std::string>(), leaf);
    if (kind == action_kind::kAskQuestion) return TeachingAction::ask_question(qa_from_json(v), leaf);
    if (kind.empty()) throw Error(Errc::SchemaViolation, "action without kind");
    return TeachingAction{kind, v, leaf};
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad action: ") + e.what());
  }
}

ActionKindRegistry& ActionKindRegistry::global() {
  static ActionKindRegistry registry;
  return registry;
}

void ActionKindRegistry::add(std::string kind, Validator validator) {
  if (kind == action_kind::kShowFile || kind == action_kind::kReadScript || kind == action_kind::kAskQuestion) {
    throw Error(Errc::InvalidRequest, "cannot re-register built-in kind " + kind);
  }
  validators_[std::move(kind)] = std::move(validator);
}

bool ActionKindRegistry::known(const std::string& kind) const { return validators_.count(kind) > 0; }

std::optional<std::string> ActionKindRegistry::check(const std::string& kind, const json& value) const {
  auto it = validators_.find(kind);
  if (it == validators_.end() || !it->second) return std::nullopt;
  return it->second(value);
}

std::optional<std::string> queue_problem(const ActionQueue& queue, std::optional<int> page_count) {
  int last_page = -1;
  // Rank of the last action seen for each leaf: 0 ShowFile, 1 ReadScript, 2 AskQuestion.
  std::map<std::string, int> rank;
  for (std::size_t i = 0; i < queue.actions.size(); ++i) {
    const auto& a = queue.actions[i];
    std::string at = "action " + std::to_string(i) + ": ";
    int r = -1;
    if (a.is(action_kind::kShowFile)) {
      if (!std::holds_alternative<ShowFileValue>(a.value)) return at + "ShowFile without page";
      int p = a.page();
      if (p < 0 || (page_count && p >= *page_count)) return at + "page " + std::to_string(p) + " out of range";
      if (p <= last_page) return at + "ShowFile pages must strictly increase";
      last_page = p;
      r = 0;
    } else if (a.is(action_kind::kReadScript)) {
      if (!std::holds_alternative<ReadScriptValue>(a.value)) return at + "ReadScript without script";
      if (text::trim(a.script()).empty()) return at + "empty script";
      r = 1;
    } else if (a.is(action_kind::kAskQuestion)) {
      if (!std::holds_alternative<QAItem>(a.value)) return at + "AskQuestion without question";
      if (auto p = qa_problem(a.question())) return at + *p;
      r = 2;
    } else {
      if (!std::holds_alternative<json>(a.value)) return at + "extension kind with typed payload";
      if (auto p = ActionKindRegistry::global().check(a.kind, std::get<json>(a.value))) return at + *p;
      continue;
    }
    auto it = rank.find(a.origin_leaf);
    if (it != rank.end()) {
      // ShowFile, then ReadScript, then questions; only questions may repeat.
      if (r < it->second || (r == it->second && r != 2)) {
        return at + a.kind + " out of order for leaf " + a.origin_leaf;
      }
    } else if (r != 0) {
      return at + "leaf " + a.origin_leaf + " has " + a.kind + " before its ShowFile";
    }
    rank[a.origin_leaf] = r;
  }
  return std::nullopt;
}

json to_json(const ActionQueue& queue) {
  json actions = json::array();
  for (const auto& a : queue.actions) actions.push_back(to_json(a));
  return {{"lecture_id", queue.lecture_id}, {"revision", queue.revision}, {"actions", std::move(actions)}};
}

ActionQueue queue_from_json(const json& value) {
  try {
    ActionQueue q;
    q.lecture_id = value.value("lecture_id", "");
    q.revision = value.value("revision", 1);
    for (const auto& a : value.at("actions")) q.actions.push_back(action_from_json(a));
    return q;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad action queue: ") + e.what());
  }
}

QueueEdit edit_from_json(const json& value) {
  try {
    QueueEdit edit;
    std::string op = value.at("op").get<std::string>();
    if (op == "insert") {
      edit.op = QueueEdit::Op::Insert;
    } else if (op == "remove") {
      edit.op = QueueEdit::Op::Remove;
    } else if (op == "replace") {
      edit.op = QueueEdit::Op::Replace;
    } else {
      throw Error(Errc::SchemaViolation, "unknown edit op '" + op + "'");
    }
    long long pos = value.at("position").get<long long>();
    if (pos < 0) throw Error(Errc::BadPosition, "negative position");
    edit.position = static_cast<std::size_t>(pos);
    if (edit.op != QueueEdit::Op::Remove) edit.action = action_from_json(value.at("action"));
    return edit;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad edit: ") + e.what());
  }
}

ActionQueue revise_queue(const ActionQueue& queue, const std::vector<QueueEdit>& edits, std::optional<int> page_count) {
  ActionQueue next = queue;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const auto& e = edits[i];
    auto& acts = next.actions;
    std::string at = "edit " + std::to_string(i) + ": ";
    switch (e.op) {
      case QueueEdit::Op::Insert:
        if (e.position > acts.size()) throw Error(Errc::BadPosition, at + "insert past end");
        if (!e.action) throw Error(Errc::InvalidRequest, at + "insert needs an action");
        acts.insert(acts.begin() + static_cast<std::ptrdiff_t>(e.position), *e.action);
        break;
      case QueueEdit::Op::Remove:
        if (e.position >= acts.size()) throw Error(Errc::BadPosition, at + "remove past end");
        acts.erase(acts.begin() + static_cast<std::ptrdiff_t>(e.position));
        break;
      case QueueEdit::Op::Replace:
        if (e.position >= acts.size()) throw Error(Errc::BadPosition, at + "replace past end");
        if (!e.action) throw Error(Errc::InvalidRequest, at + "replace needs an action");
        acts[e.position] = *e.action;
        break;
    }
  }
  if (auto problem = queue_problem(next, page_count)) throw Error(Errc::InvariantViolation, *problem);
  next.revision = queue.revision + 1;
  return next;
}

}  // namespace slidetutor
