#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "slidetutor/actions.hpp"
#include "slidetutor/gateway.hpp"
#include "slidetutor/ingest.hpp"

namespace slidetutor {

enum class NodeKind { Section, Leaf };

struct AgendaNode {
  std::string node_id;
  std::string label;
  NodeKind kind = NodeKind::Section;
  std::vector<AgendaNode> children;
  std::optional<int> page_index;
  std::vector<TeachingAction> actions;

  bool is_leaf() const { return kind == NodeKind::Leaf; }
  bool operator==(const AgendaNode&) const = default;
};

struct Agenda {
  AgendaNode root;

  static Agenda initial(std::string title);

  int leaf_count() const;
  int section_count() const;  // excluding the root
  const AgendaNode* find(std::string_view node_id) const;
  AgendaNode* find(std::string_view node_id);
  /// Leaves in order.
  std::vector<const AgendaNode*> leaves() const;
  /// Root first, node last; empty when the id is unknown.
  std::vector<const AgendaNode*> path_to(std::string_view node_id) const;

  bool operator==(const Agenda&) const = default;
};

std::string leaf_id(int page_index);
std::string section_id(int ordinal);

/// Structural invariants: leaves carry pages and no children, sections carry no
/// page, leaf pages increase in order, ids are unique.
std::optional<std::string> agenda_problem(const Agenda& agenda);

json to_json(const AgendaNode& node);
json to_json(const Agenda& agenda);
Agenda agenda_from_json(const json& value);

/// Untyped outline as produced by a model.
struct OutlineNode {
  std::string label;
  std::vector<OutlineNode> children;
};

OutlineNode parse_outline_tree(std::string_view text);
std::string render_outline(const AgendaNode& root);
/// With `pruned_view`, renders the prune of the agenda around its latest leaf.
std::string render_outline(const Agenda& agenda, bool pruned_view);
Agenda parse_outline(std::string_view text);

Agenda prune(const Agenda& agenda, std::string_view node_id);

struct Description {
  int page_index = 0;
  std::string text;
  bool operator==(const Description&) const = default;
};

json to_json(const Description& d);
Description description_from_json(const json& value);

struct AgendaConfig {
  int k = 3;
  int max_retries = 2;
  std::size_t description_cap = 512;
  std::string language = "English";
  std::string correlation;
};

Description generate_description(const Page& page, std::span<const Description> prev, Gateway& gateway,
                                 const AgendaConfig& config = {});

struct SegmentOutcome {
  Agenda agenda;
  int attempts = 0;
  bool fallback_applied = false;
  std::vector<std::string> rejections;
};

/// Checks a model outline against the pruned view and returns the master with
/// the new leaf merged in. Throws InvalidRevision.
Agenda merge_revision(const Agenda& master, const Agenda& view, const OutlineNode& reply, const Description& current);

/// Fallback placement: the new leaf goes under the parent of the latest leaf.
Agenda append_fallback(const Agenda& master, const Description& current);

SegmentOutcome segment_step(const Agenda& master, const Description& current, std::span<const Description> future,
                            Gateway& gateway, const AgendaConfig& config = {});

struct AgendaProgress {
  std::vector<Description> descriptions;
  std::optional<Agenda> agenda;
  int segmented = 0;
  std::vector<int> fallback_pages;

  bool descriptions_done(std::size_t pages) const { return descriptions.size() == pages; }
};

json to_json(const AgendaProgress& progress);
AgendaProgress agenda_progress_from_json(const json& value);

using AgendaCheckpoint = std::function<void(const AgendaProgress&)>;

/// Describes every page, then segments them in order. Picks up from `progress`
/// and reports it after every page.
Agenda build_agenda(const SlideDeck& deck, Gateway& gateway, const AgendaConfig& config, AgendaProgress& progress,
                    const AgendaCheckpoint& checkpoint = {});
Agenda build_agenda(const SlideDeck& deck, Gateway& gateway, const AgendaConfig& config = {});

}  // namespace slidetutor
