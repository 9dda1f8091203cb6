#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slidetutor/actions.hpp"
#include "slidetutor/agenda.hpp"
#include "slidetutor/gateway.hpp"
#include "slidetutor/ingest.hpp"

namespace slidetutor {

struct PlannerConfig {
  int k = 3;
  int questions_kept = 1;
  std::string language = "English";
  std::string lecture_id;
  std::string correlation;
};

TeachingAction plan_showfile(const AgendaNode& leaf);

TeachingAction plan_readscript(const AgendaNode& leaf, const Page& page, std::span<const std::string> prev_scripts,
                               Gateway& gateway, const PlannerConfig& config = {});

std::vector<TeachingAction> plan_askquestion(const AgendaNode& section, std::span<const std::string> scripts_window,
                                             Gateway& gateway, const PlannerConfig& config = {});

struct QuestionParse {
  std::vector<QAItem> items;
  std::vector<std::string> failures;
};

/// Reads "Question / A. .. / Answer: / Reference Text:" blocks. Items that do
/// not validate are reported in `failures` rather than thrown.
QuestionParse parse_question_block(std::string_view text);

/// Sections (root excluded) with at least k leaves below them, inner sections first.
std::vector<const AgendaNode*> question_sections(const Agenda& agenda, int k);

std::vector<const AgendaNode*> flatten_leaves(const AgendaNode& node);

struct PlanProgress {
  std::vector<std::string> scripts;
  /// Section id -> generated questions, in processing order.
  std::vector<std::pair<std::string, std::vector<TeachingAction>>> questions;
};

json to_json(const PlanProgress& progress);
PlanProgress plan_progress_from_json(const json& value);

using PlanCheckpoint = std::function<void(const PlanProgress&)>;

/// Generates scripts page by page, then questions per eligible section, and
/// flattens everything into the queue. Leaf actions are also stored on the agenda.
ActionQueue compile_queue(Agenda& agenda, const SlideDeck& deck, Gateway& gateway, const PlannerConfig& config,
                          PlanProgress& progress, const PlanCheckpoint& checkpoint = {});
ActionQueue compile_queue(Agenda& agenda, const SlideDeck& deck, Gateway& gateway, const PlannerConfig& config = {});

}  // namespace slidetutor
