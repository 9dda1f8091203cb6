#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "slidetutor/config.hpp"
#include "slidetutor/error.hpp"
#include "slidetutor/server.hpp"
#include "slidetutor/service.hpp"

using namespace slidetutor;

namespace {

// Exit code used by --crash-after so tests can tell a deliberate stop from a failure.
constexpr int kCrashExit = 75;

std::filesystem::path cursor_path(const ServiceConfig& c, const std::string& name) {
  return c.store_dir / "cursors" / (name + ".json");
}

void emit(const json& value, const std::string& out) {
  std::string text = value.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    fsutil::write_atomic(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slidetutor: slides to interactive lectures"};
  app.require_subcommand(1);
  std::string config_file;
  std::string store;
  std::string fixture;
  std::string renderer;
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--store", store, "data directory");
  app.add_option("--fixture", fixture, "scripted gateway fixture (no network)");
  app.add_option("--renderer", renderer, "renderer command with {input} and {outdir}");

  auto* ingest = app.add_subcommand("ingest", "store and rasterize a slide archive");
  std::string file;
  std::string title;
  std::string lecture_id;
  ingest->add_option("file", file)->required()->check(CLI::ExistingFile);
  ingest->add_option("--title", title)->required();
  ingest->add_option("--id", lecture_id, "lecture id (random by default)");

  auto* plan = app.add_subcommand("plan", "build the agenda and action queue");
  std::string plan_lecture;
  int crash_after = 0;
  plan->add_option("lecture", plan_lecture)->required();
  plan->add_option("--crash-after", crash_after, "exit abruptly after N progress checkpoints");

  auto* publish = app.add_subcommand("publish", "mark a planned lecture as published");
  std::string publish_lecture;
  publish->add_option("lecture", publish_lecture)->required();

  auto* show = app.add_subcommand("show", "print a stored document");
  std::string show_lecture;
  std::string what = "lecture";
  std::string out;
  show->add_option("lecture", show_lecture)->required();
  show->add_option("--what", what)->check(CLI::IsMember({"lecture", "deck", "agenda", "actions"}));
  show->add_option("--out", out);

  auto* simulate = app.add_subcommand("simulate", "run a session with a scripted student and gateway");
  std::string sim_lecture;
  std::string script;
  std::string session_id;
  std::string user_id = "simulated-student";
  int sim_crash = 0;
  std::string sim_out;
  simulate->add_option("lecture", sim_lecture)->required();
  simulate->add_option("--script", script, "fixture with 'gateway' and 'user' sections")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--session-id", session_id, "resume this session if it exists");
  simulate->add_option("--user", user_id);
  simulate->add_option("--crash-after", sim_crash, "exit abruptly after N steps");
  simulate->add_option("--out", sim_out, "write the transcript here instead of stdout");

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string host;
  int port = 0;
  int workers = 0;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--workers", workers);

  CLI11_PARSE(app, argc, argv);

  try {
    ServiceConfig config =
        load_config(config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file));
    if (!store.empty()) config.store_dir = store;
    if (!fixture.empty()) config.fixture = fixture;
    if (!renderer.empty()) config.renderer = renderer;

    if (*ingest) {
      Service svc(config, make_gateway(config, std::nullopt));
      Bytes bytes = fsutil::read_file(file);
      emit(to_json(svc.upload_lecture(bytes, title,
                                      lecture_id.empty() ? std::nullopt : std::optional<std::string>(lecture_id))),
           "");
    } else if (*plan) {
      Service svc(config, make_gateway(config, cursor_path(config, "plan-" + plan_lecture)));
      int checkpoints = 0;
      auto record = svc.plan_now(plan_lecture, [&] {
        if (crash_after > 0 && ++checkpoints >= crash_after) std::_Exit(kCrashExit);
      });
      emit(to_json(record), "");
    } else if (*publish) {
      Service svc(config, make_gateway(config, std::nullopt));
      emit(to_json(svc.publish(publish_lecture)), "");
    } else if (*show) {
      Service svc(config, make_gateway(config, std::nullopt));
      json doc;
      if (what == "lecture") doc = to_json(svc.lecture(show_lecture));
      if (what == "deck") doc = deck_to_json(svc.deck(show_lecture));
      if (what == "agenda") doc = to_json(svc.agenda(show_lecture));
      if (what == "actions") doc = to_json(svc.actions(show_lecture));
      emit(doc, out);
    } else if (*simulate) {
      config.fixture = script;
      config.deterministic_clock = true;
      json fixture_doc = json::parse(fsutil::read_text(script));
      ScriptedUser student(fixture_doc.value("user", json::array()));
      if (session_id.empty()) session_id = "sim-" + sim_lecture;
      Service svc(config, make_gateway(config, cursor_path(config, session_id)));
      try {
        svc.session(session_id);
      } catch (const Error& e) {
        if (e.code() != Errc::UnknownSession) throw;
        svc.create_session(sim_lecture, user_id, session_id);
      }
      int units = 0;
      while (true) {
        Session s = svc.session(session_id);
        if (s.complete()) break;
        if (s.has_pending_step()) {
          svc.drive(session_id, 1);
        } else {
          svc.post_event(session_id, student.next(s));
        }
        if (sim_crash > 0 && ++units >= sim_crash) std::_Exit(kCrashExit);
      }
      emit(transcript(svc.session(session_id)), sim_out);
    } else if (*serve) {
      if (!host.empty()) config.host = host;
      if (port > 0) config.port = port;
      if (workers > 0) config.workers = workers;
      Service svc(config, make_gateway(config, config.fixture.empty()
                                                   ? std::nullopt
                                                   : std::optional<std::filesystem::path>(
                                                         cursor_path(config, "serve"))));
      run_server(svc);
    }
  } catch (const Error& e) {
    std::cerr << "slidetutor: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "slidetutor: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
