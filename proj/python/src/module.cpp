#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slidetutor/error.hpp"
#include "slidetutor/planner.hpp"
#include "slidetutor/service.hpp"

namespace py = pybind11;
using namespace slidetutor;

// Documents cross the boundary as JSON text; the Python package decodes them.
namespace {

json parse(const std::string& s) { return json::parse(s); }

Bytes to_bytes(const py::bytes& b) {
  std::string s = b;
  return Bytes(s.begin(), s.end());
}

class PyService {
 public:
  explicit PyService(const std::string& config_json) {
    ServiceConfig c;
    apply_config_json(c, parse(config_json));
    service_ = std::make_unique<Service>(c, make_gateway(c, std::nullopt));
  }

  std::string upload(const py::bytes& archive, const std::string& title, std::optional<std::string> id) {
    Bytes data = to_bytes(archive);
    py::gil_scoped_release release;
    return to_json(service_->upload_lecture(data, title, id)).dump();
  }
  std::string plan(const std::string& id) {
    py::gil_scoped_release release;
    return to_json(service_->plan_now(id)).dump();
  }
  std::string lecture(const std::string& id) { return to_json(service_->lecture(id)).dump(); }
  std::string deck(const std::string& id) { return deck_to_json(service_->deck(id)).dump(); }
  std::string agenda(const std::string& id) { return to_json(service_->agenda(id)).dump(); }
  std::string actions(const std::string& id) { return to_json(service_->actions(id)).dump(); }
  std::string publish(const std::string& id) { return to_json(service_->publish(id)).dump(); }
  std::string update_actions(const std::string& id, int revision, const std::string& edits_json) {
    std::vector<QueueEdit> edits;
    for (const auto& e : parse(edits_json)) edits.push_back(edit_from_json(e));
    return to_json(service_->update_actions(id, revision, edits)).dump();
  }
  std::string create_session(const std::string& lecture_id, const std::string& user_id,
                             std::optional<std::string> session_id) {
    return to_json(service_->create_session(lecture_id, user_id, session_id)).dump();
  }
  std::string session(const std::string& id) { return to_json(service_->session(id)).dump(); }
  std::string post_event(const std::string& id, const std::string& event_json) {
    json out = json::array();
    for (const auto& u : service_->post_event(id, user_event_from_json(parse(event_json)))) out.push_back(to_json(u));
    return out.dump();
  }
  std::string drive(const std::string& id) {
    py::gil_scoped_release release;
    return to_json(service_->drive(id)).dump();
  }
  std::string transcript(const std::string& id) { return slidetutor::transcript(service_->session(id)).dump(); }

 private:
  std::unique_ptr<Service> service_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "slidetutor core bindings";

  // Messages keep the "<Code>: <detail>" form of Error::what().
  py::register_exception<Error>(m, "SlideTutorError", PyExc_RuntimeError);

  m.def("parse_deck", [](const py::bytes& archive, const std::string& title) {
    return deck_to_json(parse_deck(to_bytes(archive), title)).dump();
  });
  m.def("parse_outline", [](const std::string& text) { return to_json(parse_outline(text)).dump(); });
  m.def("render_outline", [](const std::string& agenda_json, bool pruned) {
    Agenda a = agenda_from_json(parse(agenda_json));
    return pruned ? render_outline(a, true) : render_outline(a.root);
  });
  m.def("prune", [](const std::string& agenda_json, const std::string& target) {
    return to_json(prune(agenda_from_json(parse(agenda_json)), target)).dump();
  });
  m.def("parse_question_block", [](const std::string& text) {
    QuestionParse q = parse_question_block(text);
    json items = json::array();
    for (const auto& i : q.items) items.push_back(to_json(i));
    return json{{"items", items}, {"failures", q.failures}}.dump();
  });
  m.def("grade_answer", [](const std::string& qa_json, const std::vector<int>& submission) {
    return grade_answer(qa_from_json(parse(qa_json)), submission);
  });
  m.def("queue_problem", [](const std::string& queue_json, std::optional<int> page_count) {
    return queue_problem(queue_from_json(parse(queue_json)), page_count);
  });
  m.def("profile_defaults", [](const std::string& name) {
    if (name == "planner") return to_json(profile_defaults(Profile::Planner)).dump();
    if (name == "tutor") return to_json(profile_defaults(Profile::Tutor)).dump();
    throw Error(Errc::InvalidRequest, "unknown profile '" + name + "'");
  });

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&>())
      .def("upload", &PyService::upload)
      .def("plan", &PyService::plan)
      .def("lecture", &PyService::lecture)
      .def("deck", &PyService::deck)
      .def("agenda", &PyService::agenda)
      .def("actions", &PyService::actions)
      .def("publish", &PyService::publish)
      .def("update_actions", &PyService::update_actions)
      .def("create_session", &PyService::create_session)
      .def("session", &PyService::session)
      .def("post_event", &PyService::post_event)
      .def("drive", &PyService::drive)
      .def("transcript", &PyService::transcript);
}
