#include "support.hpp"

#include <atomic>
#include <map>

#include "slidetutor/util.hpp"

namespace testing {

using namespace slidetutor;

std::filesystem::path data_dir() { return SLIDETUTOR_TEST_DATA; }
std::filesystem::path fixture(const std::string& relative) { return data_dir() / "fixtures" / relative; }
std::filesystem::path golden(const std::string& relative) { return data_dir() / "golden" / relative; }

std::string stub_renderer_command() {
  return std::string(SLIDETUTOR_STUB_RENDERER) + " --input {input} --outdir {outdir} --width 64 --height 48";
}

std::string cli_path() { return SLIDETUTOR_CLI; }

json read_json(const std::filesystem::path& path) { return json::parse(fsutil::read_text(path)); }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path = std::filesystem::temp_directory_path() /
         ("slidetutor-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

SlideDeck synthetic_deck(int pages, const std::string& title) {
  SlideDeck deck;
  deck.deck_id = "synthetic";
  deck.title = title;
  for (int i = 0; i < pages; ++i) {
    Page p;
    p.index = i;
    p.page_id = "slide" + std::to_string(i + 1);
    p.text_blocks = {"Page " + std::to_string(i) + " heading", "Body of page " + std::to_string(i)};
    auto img = png::solid(8, 6, static_cast<std::uint8_t>(i * 20), 100, 200);
    p.image = RasterImage{png::encode(img), img.width, img.height, "images/page-" + std::to_string(i) + ".png"};
    deck.pages.push_back(std::move(p));
  }
  return deck;
}

std::shared_ptr<Gateway> scripted(json fixture_doc, int max_attempts) {
  RetryPolicy policy;
  policy.max_attempts = max_attempts;
  policy.base_delay = std::chrono::milliseconds(0);
  return std::make_shared<Gateway>(std::make_shared<ScriptedBackend>(std::move(fixture_doc)), policy);
}

namespace {

const char* kWords[] = {"alpha", "beta",  "gamma", "delta", "loss",  "model", "data", "tree",
                        "page",  "intro", "(a)",   "x=1",   "what?", "k-means", "deep", "end"};

std::string random_label(std::mt19937& rng) {
  std::uniform_int_distribution<int> words(1, 3);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kWords) - 1);
  std::string out;
  for (int w = words(rng); w > 0; --w) {
    if (!out.empty()) out += ' ';
    out += kWords[pick(rng)];
  }
  return out;
}

struct Shape {
  std::string label;
  std::vector<int> children;
};

void materialize(const std::vector<Shape>& shapes, int at, AgendaNode& out, int& pages, int& sections) {
  out.label = shapes[static_cast<std::size_t>(at)].label;
  for (int c : shapes[static_cast<std::size_t>(at)].children) {
    AgendaNode n;
    if (shapes[static_cast<std::size_t>(c)].children.empty()) {
      n.kind = NodeKind::Leaf;
      n.label = shapes[static_cast<std::size_t>(c)].label;
      n.page_index = pages;
      n.node_id = leaf_id(pages++);
    } else {
      n.kind = NodeKind::Section;
      n.node_id = section_id(++sections);
      materialize(shapes, c, n, pages, sections);
    }
    out.children.push_back(std::move(n));
  }
}

void collect(const AgendaNode& n, const std::string& parent, std::map<std::string, std::string>& parents) {
  parents[n.node_id] = parent;
  for (const auto& c : n.children) collect(c, n.node_id, parents);
}

}  // namespace

Agenda random_agenda(std::mt19937& rng, int nodes) {
  nodes = std::max(nodes, 2);
  std::vector<Shape> shapes(static_cast<std::size_t>(nodes));
  for (auto& s : shapes) s.label = random_label(rng);
  shapes[0].children.push_back(1);
  for (int i = 2; i < nodes; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    shapes[static_cast<std::size_t>(parent(rng))].children.push_back(i);
  }
  Agenda a = Agenda::initial(shapes[0].label);
  int pages = 0;
  int sections = 0;
  materialize(shapes, 0, a.root, pages, sections);
  return a;
}

std::set<std::string> prune_oracle(const Agenda& agenda, const std::string& target) {
  std::map<std::string, std::string> parent;
  collect(agenda.root, "", parent);
  std::set<std::string> path;
  for (std::string at = target; !at.empty(); at = parent.at(at)) path.insert(at);
  std::set<std::string> kept;
  for (const auto& [id, p] : parent) {
    bool keep = path.count(id) > 0;
    for (const auto& a : path) {
      if (a != "root" && !p.empty() && parent.at(a) == p) keep = true;
    }
    if (keep) kept.insert(id);
  }
  return kept;
}

std::set<std::string> node_ids(const AgendaNode& root) {
  std::map<std::string, std::string> parent;
  collect(root, "", parent);
  std::set<std::string> out;
  for (const auto& [id, _] : parent) out.insert(id);
  return out;
}

ServiceConfig service_config(const std::filesystem::path& store) {
  ServiceConfig c;
  c.store_dir = store;
  c.renderer = stub_renderer_command();
  c.renderer_timeout_s = 30;
  c.deterministic_clock = true;
  c.workers = 1;
  return c;
}

}  // namespace testing
