#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "slidetutor/agenda.hpp"
#include "slidetutor/config.hpp"
#include "slidetutor/gateway.hpp"
#include "slidetutor/ingest.hpp"

namespace testing {

using slidetutor::json;

std::filesystem::path data_dir();
std::filesystem::path fixture(const std::string& relative);
std::filesystem::path golden(const std::string& relative);
std::string stub_renderer_command();
std::string cli_path();

json read_json(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Deck with one text block per page and a small solid image attached.
slidetutor::SlideDeck synthetic_deck(int pages, const std::string& title = "Synthetic Deck");

/// Scripted gateway with no retry delay.
std::shared_ptr<slidetutor::Gateway> scripted(json fixture, int max_attempts = 1);

/// Random agenda with `nodes` nodes in total (root included). Every section has
/// at least one child; labels are short word sequences.
slidetutor::Agenda random_agenda(std::mt19937& rng, int nodes);

/// Ids kept by a prune towards `target`: the target, its ancestors and every
/// direct sibling of those, found by scanning all nodes.
std::set<std::string> prune_oracle(const slidetutor::Agenda& agenda, const std::string& target);

std::set<std::string> node_ids(const slidetutor::AgendaNode& root);

/// Service config for an isolated store using the stub renderer.
slidetutor::ServiceConfig service_config(const std::filesystem::path& store);

}  // namespace testing
