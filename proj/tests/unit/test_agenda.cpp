#include <doctest.h>

#include <regex>

#include "slidetutor/agenda.hpp"
#include "slidetutor/error.hpp"
#include "support.hpp"

using namespace slidetutor;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

const char* kSample =
    "- Course\n"
    "-- Basics\n"
    "--- page zero\n"
    "--- page one\n"
    "-- Advanced\n"
    "--- Deep\n"
    "---- page two\n"
    "--- page three";

/// Answers segment requests by appending the new page under the root, opening
/// a new section on every fifth page starting with page 0.
class OutlineEcho : public Backend {
 public:
  ModelCompletion send(const ModelRequest& r, std::chrono::milliseconds) override {
    ModelCompletion c;
    if (r.purpose == "describe") {
      static const std::regex page(R"(Page (\d+) text:)");
      std::smatch m;
      std::string input = r.messages.back().text;
      std::regex_search(input, m, page);
      c.text = "summary " + m[1].str();
      return c;
    }
    static const std::regex shape(R"(Current outline:\n([\s\S]*)\n\nNew page (\d+) summary: (.*))");
    std::smatch m;
    std::string input = r.messages.back().text;
    REQUIRE(std::regex_search(input, m, shape));
    int page = std::stoi(m[2].str());
    c.text = m[1].str();
    if (page % 5 == 0) {
      c.text += "\n-- Part " + std::to_string(page / 5) + "\n--- " + m[3].str();
    } else {
      c.text += "\n-- " + m[3].str();
    }
    return c;
  }
  std::string name() const override { return "echo"; }
};

Description desc(int i, std::string text = {}) { return {i, text.empty() ? "page " + std::to_string(i) : text}; }

}  // namespace

TEST_CASE("outline parsing") {
  Agenda a = parse_outline(kSample);
  CHECK(a.root.label == "Course");
  CHECK(a.leaf_count() == 4);
  CHECK(a.section_count() == 3);
  CHECK(a.find("s3")->label == "Deep");
  CHECK(a.find("p2")->label == "page two");
  CHECK(a.find("p3")->page_index == 3);
  CHECK_FALSE(agenda_problem(a).has_value());
  CHECK(render_outline(a.root) == kSample);

  SUBCASE("fences and blank lines are skipped") {
    CHECK(parse_outline(std::string("```\n") + kSample + "\n\n```\n") == a);
  }
  SUBCASE("malformed outlines") {
    CHECK(code_of([] { parse_outline_tree("Course\n-- x"); }) == Errc::MalformedOutline);
    CHECK(code_of([] { parse_outline_tree("-- Course"); }) == Errc::MalformedOutline);
    CHECK(code_of([] { parse_outline_tree("- A\n- B"); }) == Errc::MalformedOutline);
    CHECK(code_of([] { parse_outline_tree("- A\n--- deep"); }) == Errc::MalformedOutline);
    CHECK(code_of([] { parse_outline_tree("- A\n--"); }) == Errc::MalformedOutline);
    CHECK(code_of([] { parse_outline_tree("\n\n"); }) == Errc::MalformedOutline);
  }
}

TEST_CASE("outline round trip on random trees") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    Agenda a = testing::random_agenda(rng, 2 + static_cast<int>(rng() % 49));
    REQUIRE_FALSE(agenda_problem(a).has_value());
    std::string text = render_outline(a.root);
    CHECK(parse_outline(text) == a);
    CHECK(agenda_from_json(to_json(a)) == a);
  }
}

TEST_CASE("prune keeps ancestors and their siblings") {
  Agenda a = parse_outline(kSample);
  Agenda v = prune(a, "p2");
  CHECK(render_outline(v.root) ==
        "- Course\n"
        "-- Basics\n"
        "-- Advanced\n"
        "--- Deep\n"
        "---- page two\n"
        "--- page three");
  CHECK(render_outline(a, true) ==
        "- Course\n"
        "-- Basics\n"
        "-- Advanced\n"
        "--- Deep\n"
        "--- page three");
  CHECK(prune(a, "root").root.children.empty());
  CHECK(code_of([&] { prune(a, "s99"); }) == Errc::UnknownNode);
}

TEST_CASE("prune matches the brute-force oracle") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    Agenda a = testing::random_agenda(rng, 2 + static_cast<int>(rng() % 49));
    auto ids = testing::node_ids(a.root);
    auto it = ids.begin();
    std::advance(it, static_cast<long>(rng() % ids.size()));
    Agenda v = prune(a, *it);
    CHECK(testing::node_ids(v.root) == testing::prune_oracle(a, *it));
    CHECK(prune(v, *it) == v);
  }
}

TEST_CASE("merging a model revision") {
  Agenda master = parse_outline(kSample);
  Agenda view = prune(master, "p3");
  std::string shown = render_outline(view.root);
  Description d = desc(4, "page four");

  SUBCASE("new leaf under the latest section") {
    Agenda m = merge_revision(master, view, parse_outline_tree(shown + "\n--- page four"), d);
    CHECK(m.find("p4") != nullptr);
    CHECK(m.path_to("p4")[1]->node_id == "s2");
    CHECK_FALSE(agenda_problem(m).has_value());
  }
  SUBCASE("new chain of sections") {
    Agenda m = merge_revision(master, view, parse_outline_tree(shown + "\n-- Extra\n--- More\n---- page four"), d);
    CHECK(m.find("s4")->label == "Extra");
    CHECK(m.find("s5")->label == "More");
    CHECK(m.path_to("p4").size() == 4);
  }
  SUBCASE("rejections") {
    CHECK(code_of([&] { merge_revision(master, view, parse_outline_tree(shown), d); }) == Errc::InvalidRevision);
    std::string edited = std::regex_replace(shown, std::regex("Basics"), "Fundamentals");
    CHECK(code_of([&] { merge_revision(master, view, parse_outline_tree(edited + "\n-- page four"), d); }) ==
          Errc::InvalidRevision);
    CHECK(code_of([&] { merge_revision(master, view, parse_outline_tree(shown + "\n---- page four"), d); }) ==
          Errc::InvalidRevision);
    CHECK(code_of([&] {
            merge_revision(master, view, parse_outline_tree(shown + "\n-- Extra\n--- a\n--- page four"), d);
          }) == Errc::InvalidRevision);
  }
}

TEST_CASE("fallback appends beside the latest page") {
  Agenda master = parse_outline(kSample);
  Agenda m = append_fallback(master, desc(4));
  CHECK(m.path_to("p4")[1]->node_id == "s2");
  Agenda empty = Agenda::initial("T");
  CHECK(append_fallback(empty, desc(0)).root.children.at(0).node_id == "p0");
}

TEST_CASE("segment step retries and falls back") {
  Agenda master = parse_outline(kSample);
  std::string good = render_outline(master, true) + "\n--- page four";
  Description d = desc(4, "page four");
  std::vector<Description> future{desc(5), desc(6)};

  SUBCASE("two rejections then success") {
    json fx = {{"scenarios",
                {{"segment",
                  {{{"text", "garbage"}, {"expect", {{"tagged", {{"context", 2}, {"input", 1}}}}}},
                   {{"text", "- Course"}, {"expect", {{"tagged", {{"retry", 2}}}}}},
                   {{"text", good}, {"expect", {{"tagged", {{"retry", 4}}}}}}}}}}};
    auto gw = testing::scripted(fx);
    auto out = segment_step(master, d, future, *gw);
    CHECK(out.attempts == 3);
    CHECK_FALSE(out.fallback_applied);
    CHECK(out.rejections.size() == 2);
    CHECK(out.agenda.path_to("p4")[1]->node_id == "s2");
  }
  SUBCASE("retries exhausted") {
    auto gw = testing::scripted({{"scenarios", {{"segment", {"x", "y", "z"}}}}});
    auto out = segment_step(master, d, future, *gw);
    CHECK(out.attempts == 3);
    CHECK(out.fallback_applied);
    CHECK(out.agenda == append_fallback(master, d));
  }
  SUBCASE("pages must arrive in order") {
    auto gw = testing::scripted({{"scenarios", {{"segment", {good}}}}});
    CHECK(code_of([&] { segment_step(master, desc(6), future, *gw); }) == Errc::InvalidRequest);
  }
}

TEST_CASE("page description request") {
  auto deck = testing::synthetic_deck(5);
  std::vector<Description> prev{desc(1, "one"), desc(2, "two"), desc(3, "three")};
  json fx = {{"scenarios",
              {{"describe",
                {{{"text", "  summary of four  "},
                  {"expect",
                   {{"images", 1},
                    {"tagged", {{"context", 3}, {"input", 1}}},
                    {"contains", {"Summary of page 1: one", "Page 4 text:\nPage 4 heading\nBody of page 4"}}}}},
                 "",
                 std::string(600, 'x')}}}}};
  auto gw = testing::scripted(fx);
  Description d = generate_description(deck.pages[4], prev, *gw);
  CHECK(d.page_index == 4);
  CHECK(d.text == "summary of four");
  CHECK(code_of([&] { generate_description(deck.pages[4], prev, *gw); }) == Errc::EmptyCompletion);
  CHECK(generate_description(deck.pages[4], prev, *gw).text.size() == 512);
  std::vector<Description> four{desc(0), desc(1), desc(2), desc(3)};
  CHECK(code_of([&] { generate_description(deck.pages[4], four, *gw); }) == Errc::InvalidRequest);
}

TEST_CASE("46-page deck yields 46 leaves") {
  auto deck = testing::synthetic_deck(46);
  Gateway gw(std::make_shared<OutlineEcho>());
  Agenda a = build_agenda(deck, gw, AgendaConfig{});
  CHECK(a.leaf_count() == 46);
  CHECK_FALSE(agenda_problem(a).has_value());
  CHECK(a.section_count() == 10);
  CHECK(a.find("s1")->label == "Part 0");
  CHECK(a.find("s10")->label == "Part 9");
  for (const auto* leaf : a.leaves()) CHECK(leaf->label == "summary " + std::to_string(*leaf->page_index));
}

TEST_CASE("agenda build resumes from progress") {
  auto deck = testing::synthetic_deck(9);
  Gateway gw(std::make_shared<OutlineEcho>());
  Agenda whole = build_agenda(deck, gw, AgendaConfig{});

  for (int cut : {1, 5, 9, 12, 17}) {
    AgendaProgress progress;
    int seen = 0;
    struct Stop {};
    try {
      build_agenda(deck, gw, AgendaConfig{}, progress, [&](const AgendaProgress&) {
        if (++seen == cut) throw Stop{};
      });
    } catch (const Stop&) {
    }
    AgendaProgress restored = agenda_progress_from_json(to_json(progress));
    CHECK(build_agenda(deck, gw, AgendaConfig{}, restored) == whole);
  }
}

TEST_CASE("agenda invariants") {
  Agenda a = parse_outline(kSample);
  Agenda dup = a;
  dup.find("p1")->node_id = "p0";
  CHECK(agenda_problem(dup).has_value());
  Agenda order = a;
  order.find("p1")->page_index = 0;
  CHECK(agenda_problem(order).has_value());
  Agenda sec = a;
  sec.find("s1")->page_index = 3;
  CHECK(agenda_problem(sec).has_value());
  json bad = to_json(dup);
  CHECK(code_of([&] { agenda_from_json(bad); }) == Errc::SchemaViolation);
}
