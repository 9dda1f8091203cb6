#include "slidetutor/planner.hpp"

#include <algorithm>
#include <regex>
#include <map>
#include <set>
#include <sstream>

#include "slidetutor/error.hpp"
#include "slidetutor/prompts.hpp"

namespace slidetutor {

TeachingAction plan_showfile(const AgendaNode& leaf) {
  if (!leaf.is_leaf() || !leaf.page_index) throw Error(Errc::NotALeaf, leaf.node_id + " is not a leaf");
  return TeachingAction::show_file(*leaf.page_index, leaf.node_id);
}

TeachingAction plan_readscript(const AgendaNode& leaf, const Page& page, std::span<const std::string> prev_scripts,
                               Gateway& gateway, const PlannerConfig& config) {
  if (!leaf.is_leaf()) throw Error(Errc::NotALeaf, leaf.node_id + " is not a leaf");
  PageContent content = page_content(page);
  auto req = ModelRequest::make(Profile::Planner, "readscript", prompts::read_script(config.language));
  req.correlation = config.correlation;
  int first = page.index - static_cast<int>(prev_scripts.size());
  for (std::size_t j = 0; j < prev_scripts.size(); ++j) {
    req.add(Role::User, "Script for page " + std::to_string(first + static_cast<int>(j)) + ":\n" + prev_scripts[j],
            "context");
  }
  Message input{Role::User, "Page " + std::to_string(page.index) + " text:\n" + content.text, {}, "input"};
  input.images.push_back(ImagePart{"image/png", content.image.png, {}});
  req.messages.push_back(std::move(input));

  std::string script = text::trim(gateway.complete(req).text);
  if (script.empty()) throw Error(Errc::EmptyCompletion, "empty script for page " + std::to_string(page.index));
  return TeachingAction::read_script(std::move(script), leaf.node_id);
}

std::vector<const AgendaNode*> flatten_leaves(const AgendaNode& node) {
  std::vector<const AgendaNode*> out;
  std::function<void(const AgendaNode&)> walk = [&](const AgendaNode& n) {
    if (n.is_leaf()) out.push_back(&n);
    for (const auto& c : n.children) walk(c);
  };
  walk(node);
  return out;
}

std::vector<TeachingAction> plan_askquestion(const AgendaNode& section, std::span<const std::string> scripts_window,
                                             Gateway& gateway, const PlannerConfig& config) {
  auto leaves = flatten_leaves(section);
  if (section.is_leaf() || leaves.empty()) throw Error(Errc::InvalidRequest, section.node_id + " has no pages");
  auto req = ModelRequest::make(Profile::Planner, "askquestion", prompts::ask_question());
  req.correlation = config.correlation;
  for (const auto& s : scripts_window) req.add(Role::User, s, "context");
  req.add(Role::User, "Section: " + section.label, "input");

  QuestionParse parsed = parse_question_block(gateway.complete(req).text);
  if (parsed.items.empty()) {
    std::string why = parsed.failures.empty() ? "no questions found" : text::join(parsed.failures, "; ");
    throw Error(Errc::NoValidQuestions, section.node_id + ": " + why);
  }
  std::size_t keep = static_cast<std::size_t>(std::clamp(config.questions_kept, 1, 3));
  std::vector<TeachingAction> out;
  const std::string& host = leaves.back()->node_id;
  for (std::size_t j = 0; j < parsed.items.size() && j < keep; ++j) {
    out.push_back(TeachingAction::ask_question(parsed.items[j], host));
  }
  return out;
}

// ---- question block parsing ----

namespace {

const std::regex kQuestionLine(R"(^(?:\*\*)?\s*(?:\d+\s*[.)]\s*)?(?:\*\*)?\s*question\s*\d*\s*(?:\*\*)?\s*[:：]\s*(.*)$)",
                               std::regex::icase);
const std::regex kOptionLine(R"(^([A-Z])\s*[.)：:]\s*(.*)$)");
const std::regex kAnswerLine(R"(^(?:\*\*)?\s*(?:correct\s+)?answers?\s*(?:\*\*)?\s*[:：]\s*(.*)$)", std::regex::icase);
const std::regex kReferenceLine(R"(^(?:\*\*)?\s*reference(?:\s+text)?\s*(?:\*\*)?\s*[:：]\s*(.*)$)",
                                std::regex::icase);
const std::regex kTypeMarker(R"(\(\s*(multiple|single)[\s_-]*choice\s*\)|\[\s*(multiple|single)[\s_-]*choice\s*\])",
                             std::regex::icase);

struct Block {
  std::string question;
  std::vector<std::string> options;
  std::optional<std::string> answer_text;
  std::optional<std::string> reference;
  enum class Part { Question, Options, Answer, Reference } part = Part::Question;
  std::string problem;
};

/// Leading run of letter tokens: "A", "A, C", "AB", "B. some text" -> B.
std::vector<int> answer_letters(const std::string& s) {
  std::string cleaned;
  for (char c : s) cleaned += (c == ',' || c == '/' || c == '&' || c == ';' || c == '(' || c == ')') ? ' ' : c;
  std::vector<int> out;
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    if (tok == "and") continue;
    while (!tok.empty() && (tok.back() == '.' || tok.back() == ':')) tok.pop_back();
    if (tok.empty() || tok.size() > kMaxOptions) break;
    bool letters = std::all_of(tok.begin(), tok.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
    if (!letters) break;
    for (char c : tok) out.push_back(c - 'A');
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<QAItem> finish(Block& b) {
  if (!b.problem.empty()) return std::nullopt;
  QAItem item;
  std::smatch m;
  std::string q = b.question;
  for (auto at = q.find("**"); at != std::string::npos; at = q.find("**")) q.erase(at, 2);
  std::optional<QuestionType> marked;
  if (std::regex_search(q, m, kTypeMarker)) {
    std::string kind = text::to_lower(m[1].matched ? m[1].str() : m[2].str());
    marked = kind == "multiple" ? QuestionType::MultipleChoice : QuestionType::SingleChoice;
    q = m.prefix().str() + m.suffix().str();
  }
  item.question = text::collapse_whitespace(q);
  for (auto& o : b.options) item.options.push_back(text::collapse_whitespace(o));
  if (!b.answer_text) {
    b.problem = "no answer line";
    return std::nullopt;
  }
  item.answer = answer_letters(*b.answer_text);
  if (item.answer.empty()) {
    b.problem = "unreadable answer '" + text::trim(*b.answer_text) + "'";
    return std::nullopt;
  }
  item.question_type = marked.value_or(item.answer.size() > 1 ? QuestionType::MultipleChoice
                                                              : QuestionType::SingleChoice);
  if (b.reference) {
    std::string r = text::trim(*b.reference);
    if (!r.empty()) item.reference = r;
  }
  if (auto p = qa_problem(item)) {
    b.problem = *p;
    return std::nullopt;
  }
  return item;
}

}  // namespace

QuestionParse parse_question_block(std::string_view input) {
  QuestionParse out;
  std::optional<Block> cur;
  int number = 0;
  auto close = [&] {
    if (!cur) return;
    if (auto item = finish(*cur)) {
      out.items.push_back(std::move(*item));
    } else {
      out.failures.push_back("question " + std::to_string(number) + ": " + cur->problem);
    }
    cur.reset();
  };

  for (const auto& raw : text::split_lines(input)) {
    std::string line = text::trim(raw);
    std::smatch m;
    if (std::regex_match(line, m, kQuestionLine)) {
      close();
      ++number;
      cur.emplace();
      cur->question = m[1].str();
      continue;
    }
    if (!cur || line.empty()) continue;
    if (std::regex_match(line, m, kAnswerLine)) {
      cur->answer_text = m[1].str();
      cur->part = Block::Part::Answer;
    } else if (std::regex_match(line, m, kReferenceLine)) {
      cur->reference = m[1].str();
      cur->part = Block::Part::Reference;
    } else if (cur->part != Block::Part::Answer && cur->part != Block::Part::Reference &&
               std::regex_match(line, m, kOptionLine) &&
               m[1].str()[0] == static_cast<char>('A' + cur->options.size())) {
      cur->options.push_back(m[2].str());
      cur->part = Block::Part::Options;
    } else if (cur->part == Block::Part::Question) {
      cur->question += " " + line;
    } else if (cur->part == Block::Part::Options) {
      cur->options.back() += " " + line;
    } else if (cur->part == Block::Part::Reference) {
      *cur->reference += " " + line;
    }
  }
  close();
  return out;
}

std::vector<const AgendaNode*> question_sections(const Agenda& agenda, int k) {
  std::vector<const AgendaNode*> out;
  std::function<void(const AgendaNode&)> walk = [&](const AgendaNode& n) {
    for (const auto& c : n.children) walk(c);
    if (&n != &agenda.root && !n.is_leaf() && static_cast<int>(flatten_leaves(n).size()) >= k) out.push_back(&n);
  };
  walk(agenda.root);
  return out;
}

json to_json(const PlanProgress& p) {
  json qs = json::array();
  for (const auto& [section, actions] : p.questions) {
    json acts = json::array();
    for (const auto& a : actions) acts.push_back(to_json(a));
    qs.push_back({{"section", section}, {"actions", std::move(acts)}});
  }
  return {{"scripts", p.scripts}, {"questions", std::move(qs)}};
}

PlanProgress plan_progress_from_json(const json& value) {
  PlanProgress p;
  try {
    p.scripts = value.at("scripts").get<std::vector<std::string>>();
    for (const auto& q : value.at("questions")) {
      std::vector<TeachingAction> acts;
      for (const auto& a : q.at("actions")) acts.push_back(action_from_json(a));
      p.questions.emplace_back(q.at("section").get<std::string>(), std::move(acts));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad plan progress: ") + e.what());
  }
  return p;
}

ActionQueue compile_queue(Agenda& agenda, const SlideDeck& deck, Gateway& gateway, const PlannerConfig& config_in,
                          PlanProgress& progress, const PlanCheckpoint& checkpoint) {
  if (auto p = agenda_problem(agenda)) throw Error(Errc::InvariantViolation, *p);
  auto leaves = agenda.leaves();
  if (leaves.size() != deck.pages.size()) {
    throw Error(Errc::InvalidRequest, "agenda has " + std::to_string(leaves.size()) + " leaves for " +
                                          std::to_string(deck.pages.size()) + " pages");
  }
  PlannerConfig config = config_in;
  if (config.correlation.empty()) config.correlation = config.lecture_id.empty() ? deck.deck_id : config.lecture_id;
  const std::size_t k = static_cast<std::size_t>(std::max(config.k, 0));
  auto notify = [&] {
    if (checkpoint) checkpoint(progress);
  };

  for (std::size_t i = progress.scripts.size(); i < leaves.size(); ++i) {
    std::size_t from = i > k ? i - k : 0;
    std::span<const std::string> prev(progress.scripts.data() + from, i - from);
    const Page& page = deck.pages[static_cast<std::size_t>(*leaves[i]->page_index)];
    progress.scripts.push_back(plan_readscript(*leaves[i], page, prev, gateway, config).script());
    notify();
  }

  auto sections = question_sections(agenda, config.k);
  for (std::size_t s = progress.questions.size(); s < sections.size(); ++s) {
    auto host = flatten_leaves(*sections[s]).back();
    std::size_t i = static_cast<std::size_t>(*host->page_index);
    std::size_t from = i > k ? i - k : 0;
    std::span<const std::string> window(progress.scripts.data() + from, i + 1 - from);
    progress.questions.emplace_back(sections[s]->node_id, plan_askquestion(*sections[s], window, gateway, config));
    notify();
  }

  std::map<std::string, std::vector<TeachingAction>> by_leaf;
  for (const auto& [_, actions] : progress.questions) {
    for (const auto& a : actions) by_leaf[a.origin_leaf].push_back(a);
  }
  ActionQueue queue;
  queue.lecture_id = config.lecture_id;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    AgendaNode* leaf = agenda.find(leaves[i]->node_id);
    leaf->actions = {plan_showfile(*leaf), TeachingAction::read_script(progress.scripts[i], leaf->node_id)};
    auto it = by_leaf.find(leaf->node_id);
    if (it != by_leaf.end()) leaf->actions.insert(leaf->actions.end(), it->second.begin(), it->second.end());
    queue.actions.insert(queue.actions.end(), leaf->actions.begin(), leaf->actions.end());
  }
  if (auto p = queue_problem(queue, static_cast<int>(deck.pages.size()))) throw Error(Errc::InvariantViolation, *p);
  return queue;
}

ActionQueue compile_queue(Agenda& agenda, const SlideDeck& deck, Gateway& gateway, const PlannerConfig& config) {
  PlanProgress progress;
  return compile_queue(agenda, deck, gateway, config, progress);
}

}  // namespace slidetutor
