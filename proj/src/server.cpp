#include "slidetutor/server.hpp"

#include <iostream>

namespace slidetutor {

int http_status(Errc code) {
  switch (code) {
    case Errc::MalformedArchive:
    case Errc::EmptyDeck:
    case Errc::InvariantViolation:
    case Errc::BadPosition:
    case Errc::SchemaViolation:
      return 422;
    case Errc::UnknownLecture:
    case Errc::UnknownSession:
    case Errc::UnknownNode:
      return 404;
    case Errc::Conflict:
    case Errc::StaleRevision:
    case Errc::NotAwaitingInput:
    case Errc::NoQueue:
      return 409;
    case Errc::InvalidRequest:
    case Errc::BadIndex:
    case Errc::UnsupportedAction:
    case Errc::NotALeaf:
      return 400;
    case Errc::Timeout:
    case Errc::BackendRejected:
    case Errc::TransientBackend:
    case Errc::RetriesExhausted:
    case Errc::FixtureExhausted:
    case Errc::AssertionFailed:
    case Errc::EmptyCompletion:
    case Errc::MalformedOutline:
    case Errc::InvalidRevision:
    case Errc::NoValidQuestions:
      return 502;
    default:
      return 500;
  }
}

json error_body(const Error& e) { return {{"error", {{"code", std::string(errc_name(e.code()))}, {"message", e.what()}}}}; }

json envelope(const std::string& session_id, std::size_t seq, const Utterance& u) {
  return {{"session_id", session_id}, {"seq", seq}, {"utterance", to_json(u)}};
}

std::string sse_frame(const json& env) {
  return "id: " + std::to_string(env.at("seq").get<std::size_t>()) + "\nevent: utterance\ndata: " + env.dump() +
         "\n\n";
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_json(res, http_status(e.code()), error_body(e));
  } catch (const json::exception& e) {
    send_json(res, 400, error_body(Error(Errc::InvalidRequest, e.what())));
  } catch (const std::exception& e) {
    send_json(res, 500, error_body(Error(Errc::Io, e.what())));
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidRequest, std::string("body is not JSON: ") + e.what());
  }
}

std::size_t from_param(const httplib::Request& req) {
  try {
    if (req.has_param("from")) return std::stoul(req.get_param_value("from"));
    if (req.has_header("Last-Event-ID")) return std::stoul(req.get_header_value("Last-Event-ID")) + 1;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidRequest, "'from' must be a non-negative integer");
  }
  return 0;
}

}  // namespace

void register_routes(httplib::Server& server, Service& service) {
  const std::string token = service.config().bearer_token;
  if (!token.empty()) {
    server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
      if (req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") != "Bearer " + token) {
        send_json(res, 401, {{"error", {{"code", "Unauthorized"}, {"message", "missing or wrong bearer token"}}}});
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
  }

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

  server.Post("/lectures", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string title;
      std::string content;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) throw Error(Errc::InvalidRequest, "multipart upload needs a 'file' part");
        const auto file = req.get_file_value("file");
        content = file.content;
        title = req.has_file("title") ? req.get_file_value("title").content
                                      : std::filesystem::path(file.filename).stem().string();
      } else {
        content = req.body;
        title = req.get_param_value("title");
      }
      if (req.has_param("title")) title = req.get_param_value("title");
      if (text::trim(title).empty()) throw Error(Errc::InvalidRequest, "a title is required");
      std::optional<std::string> id;
      if (req.has_param("id")) id = req.get_param_value("id");
      Bytes bytes(content.begin(), content.end());
      send_json(res, 201, to_json(service.upload_lecture(bytes, title, id)));
    });
  });

  server.Get("/lectures/:id", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(service.lecture(req.path_params.at("id")))); });
  });

  server.Post("/lectures/:id/plan", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.path_params.at("id");
      LectureRecord r = service.generate_plan(id);
      if (req.get_param_value("wait") == "1") {
        r = service.wait_for_plan(id, std::chrono::minutes(30));
        send_json(res, r.planning == "failed" ? 502 : 200, to_json(r));
        return;
      }
      send_json(res, 202, to_json(r));
    });
  });

  server.Post("/lectures/:id/publish", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(service.publish(req.path_params.at("id")))); });
  });

  server.Get("/lectures/:id/agenda", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(service.agenda(req.path_params.at("id")))); });
  });

  server.Get("/lectures/:id/actions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(service.actions(req.path_params.at("id")))); });
  });

  server.Patch("/lectures/:id/actions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = parse_body(req);
      if (!body.contains("revision") || !body.contains("edits") || !body["edits"].is_array()) {
        throw Error(Errc::InvalidRequest, "expected {revision, edits: [...]}");
      }
      std::vector<QueueEdit> edits;
      for (const auto& e : body["edits"]) edits.push_back(edit_from_json(e));
      send_json(res, 200, to_json(service.update_actions(req.path_params.at("id"), body["revision"].get<int>(), edits)));
    });
  });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = parse_body(req);
      if (!body.contains("lecture_id")) throw Error(Errc::InvalidRequest, "lecture_id is required");
      std::optional<std::string> sid;
      if (body.contains("session_id")) sid = body["session_id"].get<std::string>();
      Session s = service.create_session(body["lecture_id"].get<std::string>(), body.value("user_id", "anonymous"), sid);
      send_json(res, 201,
                {{"session_id", s.session_id},
                 {"lecture_id", s.lecture_id},
                 {"user_id", s.user_id},
                 {"phase", to_string(s.phase)},
                 {"cursor", s.cursor}});
    });
  });

  server.Post("/sessions/:id/events", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.path_params.at("id");
      std::size_t before = service.session(id).history.size();
      auto added = service.post_event(id, user_event_from_json(parse_body(req)));
      json events = json::array();
      for (std::size_t i = 0; i < added.size(); ++i) events.push_back(envelope(id, before + i, added[i]));
      send_json(res, 202, {{"events", std::move(events)}});
    });
  });

  server.Get("/sessions/:id/history", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.path_params.at("id");
      std::size_t from = from_param(req);
      Session s = service.session(id);
      json events = json::array();
      for (std::size_t i = from; i < s.history.size(); ++i) events.push_back(envelope(id, i, s.history[i]));
      json steps = json::array();
      for (const auto& r : s.step_log) steps.push_back(to_json(r));
      json calls = json::array();
      for (const auto& c : service.gateway().log().records_for(id)) calls.push_back(to_json(c));
      send_json(res, 200,
                {{"session_id", id},
                 {"lecture_id", s.lecture_id},
                 {"phase", to_string(s.phase)},
                 {"cursor", s.cursor},
                 {"complete", s.complete()},
                 {"events", std::move(events)},
                 {"step_log", std::move(steps)},
                 {"calls", std::move(calls)}});
    });
  });

  server.Get("/sessions/:id/stream", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.path_params.at("id");
      std::size_t from = from_param(req);
      service.session(id);  // 404 before the stream starts
      res.set_header("Cache-Control", "no-cache");
      if (req.get_param_value("follow") == "0") {
        std::string body;
        for (const auto& [seq, u] : service.events_since(id, from, std::chrono::milliseconds(0))) {
          body += sse_frame(envelope(id, seq, u));
        }
        res.set_content(body, "text/event-stream");
        return;
      }
      auto next = std::make_shared<std::size_t>(from);
      res.set_chunked_content_provider("text/event-stream", [&service, id, next](std::size_t, httplib::DataSink& sink) {
        try {
          auto events = service.events_since(id, *next, std::chrono::seconds(1));
          for (const auto& [seq, u] : events) {
            std::string frame = sse_frame(envelope(id, seq, u));
            if (!sink.write(frame.data(), frame.size())) return false;
            *next = seq + 1;
          }
          if (events.empty()) {
            if (service.session(id).complete()) {
              std::string end = "event: end\ndata: {}\n\n";
              sink.write(end.data(), end.size());
              sink.done();
              return true;
            }
            std::string ping = ": keep-alive\n\n";
            if (!sink.write(ping.data(), ping.size())) return false;
          }
          return true;
        } catch (const std::exception&) {
          return false;
        }
      });
    });
  });
}

void run_server(Service& service) {
  httplib::Server server;
  register_routes(server, service);
  service.start_workers(service.config().workers);
  const auto& c = service.config();
  std::cerr << "slidetutor: listening on " << c.host << ":" << c.port << "\n";
  if (!server.listen(c.host, c.port)) {
    service.stop_workers();
    throw Error(Errc::Io, "cannot listen on " + c.host + ":" + std::to_string(c.port));
  }
  service.stop_workers();
}

}  // namespace slidetutor
