#include "slidetutor/agenda.hpp"

#include <algorithm>
#include <set>

#include "slidetutor/error.hpp"
#include "slidetutor/prompts.hpp"

namespace slidetutor {

namespace {

template <typename F>
void preorder(const AgendaNode& node, F&& f) {
  f(node);
  for (const auto& c : node.children) preorder(c, f);
}

const AgendaNode* find_in(const AgendaNode& node, std::string_view id) {
  if (node.node_id == id) return &node;
  for (const auto& c : node.children) {
    if (const auto* hit = find_in(c, id)) return hit;
  }
  return nullptr;
}

bool path_in(const AgendaNode& node, std::string_view id, std::vector<const AgendaNode*>& path) {
  path.push_back(&node);
  if (node.node_id == id) return true;
  for (const auto& c : node.children) {
    if (path_in(c, id, path)) return true;
  }
  path.pop_back();
  return false;
}

AgendaNode folded(const AgendaNode& node) {
  AgendaNode copy = node;
  copy.children.clear();
  return copy;
}

}  // namespace

std::string leaf_id(int page_index) { return "p" + std::to_string(page_index); }
std::string section_id(int ordinal) { return "s" + std::to_string(ordinal); }

Agenda Agenda::initial(std::string title) {
  Agenda a;
  a.root.node_id = "root";
  a.root.label = text::collapse_whitespace(title);
  a.root.kind = NodeKind::Section;
  return a;
}

int Agenda::leaf_count() const {
  int n = 0;
  preorder(root, [&](const AgendaNode& x) { n += x.is_leaf() ? 1 : 0; });
  return n;
}

int Agenda::section_count() const {
  int n = 0;
  preorder(root, [&](const AgendaNode& x) { n += x.is_leaf() ? 0 : 1; });
  return n - 1;
}

const AgendaNode* Agenda::find(std::string_view node_id) const { return find_in(root, node_id); }

AgendaNode* Agenda::find(std::string_view node_id) { return const_cast<AgendaNode*>(find_in(root, node_id)); }

std::vector<const AgendaNode*> Agenda::leaves() const {
  std::vector<const AgendaNode*> out;
  preorder(root, [&](const AgendaNode& x) {
    if (x.is_leaf()) out.push_back(&x);
  });
  return out;
}

std::vector<const AgendaNode*> Agenda::path_to(std::string_view node_id) const {
  std::vector<const AgendaNode*> path;
  if (!path_in(root, node_id, path)) path.clear();
  return path;
}

std::optional<std::string> agenda_problem(const Agenda& agenda) {
  if (agenda.root.is_leaf()) return "root must be a section";
  if (agenda.root.label.empty()) return "root has no label";
  std::set<std::string> ids;
  std::optional<std::string> problem;
  int last_page = -1;
  preorder(agenda.root, [&](const AgendaNode& n) {
    if (problem) return;
    if (!ids.insert(n.node_id).second) {
      problem = "duplicate node id " + n.node_id;
    } else if (n.is_leaf()) {
      if (!n.children.empty()) problem = "leaf " + n.node_id + " has children";
      else if (!n.page_index) problem = "leaf " + n.node_id + " has no page";
      else if (*n.page_index <= last_page) problem = "leaf pages out of order at " + n.node_id;
      else last_page = *n.page_index;
    } else if (n.page_index) {
      problem = "section " + n.node_id + " carries a page";
    }
  });
  return problem;
}

json to_json(const AgendaNode& node) {
  json out = {{"node_id", node.node_id}, {"label", node.label}, {"kind", node.is_leaf() ? "leaf" : "section"}};
  if (node.is_leaf()) {
    out["page_index"] = node.page_index.value_or(-1);
    if (!node.actions.empty()) {
      json acts = json::array();
      for (const auto& a : node.actions) acts.push_back(to_json(a));
      out["actions"] = std::move(acts);
    }
  } else {
    json kids = json::array();
    for (const auto& c : node.children) kids.push_back(to_json(c));
    out["children"] = std::move(kids);
  }
  return out;
}

json to_json(const Agenda& agenda) { return {{"root", to_json(agenda.root)}, {"leaf_count", agenda.leaf_count()}}; }

namespace {

AgendaNode node_from_json(const json& v) {
  AgendaNode n;
  n.node_id = v.at("node_id").get<std::string>();
  n.label = v.at("label").get<std::string>();
  std::string kind = v.at("kind").get<std::string>();
  if (kind == "leaf") {
    n.kind = NodeKind::Leaf;
    n.page_index = v.at("page_index").get<int>();
    if (v.contains("actions")) {
      for (const auto& a : v["actions"]) n.actions.push_back(action_from_json(a));
    }
  } else if (kind == "section") {
    n.kind = NodeKind::Section;
    for (const auto& c : v.value("children", json::array())) n.children.push_back(node_from_json(c));
  } else {
    throw Error(Errc::SchemaViolation, "unknown node kind '" + kind + "'");
  }
  return n;
}

}  // namespace

Agenda agenda_from_json(const json& value) {
  Agenda a;
  try {
    a.root = node_from_json(value.at("root"));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad agenda: ") + e.what());
  }
  if (auto p = agenda_problem(a)) throw Error(Errc::SchemaViolation, *p);
  if (value.contains("leaf_count") && value["leaf_count"].get<int>() != a.leaf_count()) {
    throw Error(Errc::SchemaViolation, "leaf_count does not match the tree");
  }
  return a;
}

// ---- outline text ----

namespace {

struct OutlineLine {
  int depth;
  std::string label;
};

std::size_t build_outline(const std::vector<OutlineLine>& lines, std::size_t i, OutlineNode& parent) {
  int depth = lines[i - 1].depth;
  while (i < lines.size() && lines[i].depth == depth + 1) {
    OutlineNode child{lines[i].label, {}};
    i = build_outline(lines, i + 1, child);
    parent.children.push_back(std::move(child));
  }
  return i;
}

void render_into(const AgendaNode& node, int depth, std::string& out) {
  if (!out.empty()) out += '\n';
  out.append(static_cast<std::size_t>(depth), '-');
  out += ' ';
  out += text::collapse_whitespace(node.label);
  for (const auto& c : node.children) render_into(c, depth + 1, out);
}

void adopt(const OutlineNode& src, AgendaNode& dst, int& pages, int& sections) {
  for (const auto& c : src.children) {
    AgendaNode n;
    n.label = text::collapse_whitespace(c.label);
    if (c.children.empty()) {
      n.kind = NodeKind::Leaf;
      n.page_index = pages;
      n.node_id = leaf_id(pages++);
    } else {
      n.kind = NodeKind::Section;
      n.node_id = section_id(++sections);
      adopt(c, n, pages, sections);
    }
    dst.children.push_back(std::move(n));
  }
}

}  // namespace

OutlineNode parse_outline_tree(std::string_view input) {
  std::vector<OutlineLine> lines;
  int lineno = 0;
  for (const auto& raw : text::split_lines(input)) {
    ++lineno;
    std::string line = text::trim(raw);
    if (line.empty() || line.rfind("```", 0) == 0) continue;
    std::size_t d = line.find_first_not_of('-');
    std::string where = "line " + std::to_string(lineno);
    if (d == 0) throw Error(Errc::MalformedOutline, where + " does not start with '-'");
    std::string label = d == std::string::npos ? std::string() : text::trim(line.substr(d));
    if (label.empty()) throw Error(Errc::MalformedOutline, where + " has an empty label");
    int depth = static_cast<int>(d);
    if (lines.empty()) {
      if (depth != 1) throw Error(Errc::MalformedOutline, where + ": the first line must have depth 1");
    } else {
      if (depth == 1) throw Error(Errc::MalformedOutline, where + ": more than one root");
      if (depth > lines.back().depth + 1) throw Error(Errc::MalformedOutline, where + ": depth jumps by more than one");
    }
    lines.push_back({depth, std::move(label)});
  }
  if (lines.empty()) throw Error(Errc::MalformedOutline, "empty outline");
  OutlineNode root{lines[0].label, {}};
  build_outline(lines, 1, root);
  return root;
}

std::string render_outline(const AgendaNode& root) {
  std::string out;
  render_into(root, 1, out);
  return out;
}

std::string render_outline(const Agenda& agenda, bool pruned_view) {
  if (!pruned_view) return render_outline(agenda.root);
  auto leaves = agenda.leaves();
  return render_outline(prune(agenda, leaves.empty() ? "root" : leaves.back()->node_id).root);
}

Agenda parse_outline(std::string_view text_in) {
  OutlineNode tree = parse_outline_tree(text_in);
  Agenda a = Agenda::initial(tree.label);
  int pages = 0;
  int sections = 0;
  adopt(tree, a.root, pages, sections);
  return a;
}

// ---- pruning ----

namespace {

AgendaNode prune_copy(const AgendaNode& node, const std::vector<const AgendaNode*>& path, std::size_t depth) {
  // `node` is path[depth]; the target itself is folded.
  if (depth + 1 == path.size()) return folded(node);
  AgendaNode copy = folded(node);
  for (const auto& c : node.children) {
    copy.children.push_back(&c == path[depth + 1] ? prune_copy(c, path, depth + 1) : folded(c));
  }
  return copy;
}

}  // namespace

Agenda prune(const Agenda& agenda, std::string_view node_id) {
  auto path = agenda.path_to(node_id);
  if (path.empty()) throw Error(Errc::UnknownNode, "no node '" + std::string(node_id) + "'");
  Agenda view;
  view.root = prune_copy(agenda.root, path, 0);
  return view;
}

// ---- descriptions ----

json to_json(const Description& d) { return {{"page_index", d.page_index}, {"text", d.text}}; }

Description description_from_json(const json& value) {
  try {
    return {value.at("page_index").get<int>(), value.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad description: ") + e.what());
  }
}

Description generate_description(const Page& page, std::span<const Description> prev, Gateway& gateway,
                                 const AgendaConfig& config) {
  if (prev.size() > static_cast<std::size_t>(std::max(config.k, 0))) {
    throw Error(Errc::InvalidRequest, "more than k previous descriptions");
  }
  PageContent content = page_content(page);
  auto req = ModelRequest::make(Profile::Planner, "describe", prompts::describe(config.language));
  req.correlation = config.correlation;
  for (const auto& d : prev) {
    req.add(Role::User, "Summary of page " + std::to_string(d.page_index) + ": " + d.text, "context");
  }
  Message input{Role::User, "Page " + std::to_string(page.index) + " text:\n" + content.text, {}, "input"};
  input.images.push_back(ImagePart{"image/png", content.image.png, {}});
  req.messages.push_back(std::move(input));

  std::string out = text::trim(gateway.complete(req).text);
  if (out.empty()) throw Error(Errc::EmptyCompletion, "empty description for page " + std::to_string(page.index));
  return {page.index, text::utf8_truncate(out, config.description_cap)};
}

// ---- segmentation ----

namespace {

struct FlatOutline {
  const OutlineNode* node;
  int parent;
};

struct FlatAgenda {
  const AgendaNode* node;
  int parent;
};

void flatten(const OutlineNode& n, int parent, std::vector<FlatOutline>& out) {
  int me = static_cast<int>(out.size());
  out.push_back({&n, parent});
  for (const auto& c : n.children) flatten(c, me, out);
}

void flatten(const AgendaNode& n, int parent, std::vector<FlatAgenda>& out) {
  int me = static_cast<int>(out.size());
  out.push_back({&n, parent});
  for (const auto& c : n.children) flatten(c, me, out);
}

AgendaNode make_leaf(const Description& d) {
  AgendaNode leaf;
  leaf.node_id = leaf_id(d.page_index);
  leaf.label = text::collapse_whitespace(d.text);
  leaf.kind = NodeKind::Leaf;
  leaf.page_index = d.page_index;
  return leaf;
}

void require_prefix(const Agenda& master, const Description& current) {
  auto leaves = master.leaves();
  for (std::size_t j = 0; j < leaves.size(); ++j) {
    if (leaves[j]->page_index != static_cast<int>(j)) {
      throw Error(Errc::InvalidRequest, "agenda leaves are not pages 0.." + std::to_string(leaves.size() - 1));
    }
  }
  if (current.page_index != static_cast<int>(leaves.size())) {
    throw Error(Errc::InvalidRequest, "next page should be " + std::to_string(leaves.size()) + ", got " +
                                          std::to_string(current.page_index));
  }
}

}  // namespace

Agenda merge_revision(const Agenda& master, const Agenda& view, const OutlineNode& reply, const Description& current) {
  std::vector<FlatOutline> r;
  std::vector<FlatAgenda> v;
  flatten(reply, -1, r);
  flatten(view.root, -1, v);
  if (r.size() <= v.size()) throw Error(Errc::InvalidRevision, "the reply does not add the new page");

  const std::size_t first_new = v.size();
  for (std::size_t j = 0; j < first_new; ++j) {
    bool same = r[j].parent == v[j].parent &&
                text::collapse_whitespace(r[j].node->label) == text::collapse_whitespace(v[j].node->label);
    if (!same) {
      throw Error(Errc::InvalidRevision,
                  "line " + std::to_string(j + 1) + " changes the existing outline ('" + v[j].node->label + "')");
    }
  }
  for (std::size_t j = first_new + 1; j < r.size(); ++j) {
    if (r[j].parent != static_cast<int>(j) - 1) {
      throw Error(Errc::InvalidRevision, "new lines must be a single chain of sections ending at the new page");
    }
  }

  const AgendaNode* attach = v[static_cast<std::size_t>(r[first_new].parent)].node;
  if (attach->is_leaf()) throw Error(Errc::InvalidRevision, "the new page is nested under a page");
  // Only the rightmost path may grow, otherwise page order would break.
  const AgendaNode* cursor = &view.root;
  while (cursor != attach && !cursor->children.empty()) cursor = &cursor->children.back();
  if (cursor != attach) throw Error(Errc::InvalidRevision, "the new page must come after the latest page");

  Agenda merged = master;
  AgendaNode* target = merged.find(attach->node_id);
  if (target == nullptr) throw Error(Errc::UnknownNode, "view node " + attach->node_id + " is not in the agenda");

  int next = master.section_count() + 1;
  AgendaNode chain = make_leaf(current);
  for (std::size_t j = r.size() - 1; j-- > first_new;) {
    AgendaNode section;
    section.node_id = section_id(next + static_cast<int>(j - first_new));
    section.label = text::collapse_whitespace(r[j].node->label);
    section.kind = NodeKind::Section;
    section.children.push_back(std::move(chain));
    chain = std::move(section);
  }
  target->children.push_back(std::move(chain));
  return merged;
}

Agenda append_fallback(const Agenda& master, const Description& current) {
  auto leaves = master.leaves();
  std::string parent = "root";
  if (!leaves.empty()) {
    auto path = master.path_to(leaves.back()->node_id);
    parent = path[path.size() - 2]->node_id;
  }
  Agenda merged = master;
  merged.find(parent)->children.push_back(make_leaf(current));
  return merged;
}

SegmentOutcome segment_step(const Agenda& master, const Description& current, std::span<const Description> future,
                            Gateway& gateway, const AgendaConfig& config) {
  require_prefix(master, current);
  auto leaves = master.leaves();
  Agenda view = prune(master, leaves.empty() ? "root" : leaves.back()->node_id);

  auto req = ModelRequest::make(Profile::Planner, "segment", prompts::segment());
  req.correlation = config.correlation;
  for (const auto& d : future) {
    req.add(Role::User, "Upcoming page " + std::to_string(d.page_index) + " summary: " + d.text, "context");
  }
  req.add(Role::User,
          "Current outline:\n" + render_outline(view.root) + "\n\nNew page " + std::to_string(current.page_index) +
              " summary: " + text::collapse_whitespace(current.text),
          "input");

  SegmentOutcome outcome;
  for (int attempt = 0; attempt <= std::max(config.max_retries, 0); ++attempt) {
    outcome.attempts = attempt + 1;
    std::string reply = gateway.complete(req).text;
    try {
      outcome.agenda = merge_revision(master, view, parse_outline_tree(reply), current);
      return outcome;
    } catch (const Error& e) {
      if (e.code() != Errc::MalformedOutline && e.code() != Errc::InvalidRevision) throw;
      outcome.rejections.push_back(e.what());
      req.add(Role::Assistant, reply, "retry");
      req.add(Role::User,
              std::string("That outline was rejected (") + e.what() +
                  "). Reply again with the complete outline, existing lines unchanged and the new page last.",
              "retry");
    }
  }
  outcome.agenda = append_fallback(master, current);
  outcome.fallback_applied = true;
  return outcome;
}

// ---- whole-deck build ----

json to_json(const AgendaProgress& p) {
  json ds = json::array();
  for (const auto& d : p.descriptions) ds.push_back(to_json(d));
  return {{"descriptions", std::move(ds)},
          {"agenda", p.agenda ? to_json(*p.agenda) : json(nullptr)},
          {"segmented", p.segmented},
          {"fallback_pages", p.fallback_pages}};
}

AgendaProgress agenda_progress_from_json(const json& value) {
  AgendaProgress p;
  try {
    for (const auto& d : value.at("descriptions")) p.descriptions.push_back(description_from_json(d));
    if (!value.at("agenda").is_null()) p.agenda = agenda_from_json(value["agenda"]);
    p.segmented = value.at("segmented").get<int>();
    p.fallback_pages = value.value("fallback_pages", std::vector<int>{});
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("bad agenda progress: ") + e.what());
  }
  return p;
}

Agenda build_agenda(const SlideDeck& deck, Gateway& gateway, const AgendaConfig& config_in, AgendaProgress& progress,
                    const AgendaCheckpoint& checkpoint) {
  const std::size_t n = deck.pages.size();
  if (n == 0) throw Error(Errc::EmptyDeck, "deck has no pages");
  if (progress.descriptions.size() > n || progress.segmented > static_cast<int>(n)) {
    throw Error(Errc::InvalidRequest, "progress does not belong to this deck");
  }
  AgendaConfig config = config_in;
  if (config.correlation.empty()) config.correlation = deck.deck_id;
  const std::size_t k = static_cast<std::size_t>(std::max(config.k, 0));
  auto notify = [&] {
    if (checkpoint) checkpoint(progress);
  };

  for (std::size_t i = progress.descriptions.size(); i < n; ++i) {
    std::size_t from = i > k ? i - k : 0;
    std::span<const Description> prev(progress.descriptions.data() + from, i - from);
    progress.descriptions.push_back(generate_description(deck.pages[i], prev, gateway, config));
    notify();
  }

  if (!progress.agenda) progress.agenda = Agenda::initial(deck.title);
  for (std::size_t i = static_cast<std::size_t>(progress.segmented); i < n; ++i) {
    std::size_t count = std::min(k, n - i - 1);
    std::span<const Description> future(progress.descriptions.data() + i + 1, count);
    SegmentOutcome out = segment_step(*progress.agenda, progress.descriptions[i], future, gateway, config);
    progress.agenda = std::move(out.agenda);
    if (out.fallback_applied) progress.fallback_pages.push_back(static_cast<int>(i));
    progress.segmented = static_cast<int>(i + 1);
    notify();
  }

  const Agenda& agenda = *progress.agenda;
  if (agenda.leaf_count() != static_cast<int>(n)) {
    throw Error(Errc::InvariantViolation, "agenda has " + std::to_string(agenda.leaf_count()) + " leaves for " +
                                              std::to_string(n) + " pages");
  }
  if (auto p = agenda_problem(agenda)) throw Error(Errc::InvariantViolation, *p);
  return agenda;
}

Agenda build_agenda(const SlideDeck& deck, Gateway& gateway, const AgendaConfig& config) {
  AgendaProgress progress;
  return build_agenda(deck, gateway, config, progress);
}

}  // namespace slidetutor
