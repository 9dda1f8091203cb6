"""Golden lecture planned and taught through the bindings, compared with the golden files."""

import pytest

import slidetutor
from conftest import FIXTURES, GOLDEN, load

TITLE = "Introduction to Machine Learning"


def service(tmp_path, renderer, fixture):
    return slidetutor.Service(
        {
            "store_dir": str(tmp_path / "store"),
            "renderer": renderer,
            "fixture": str(FIXTURES / "golden" / fixture),
            "deterministic_clock": True,
        }
    )


@pytest.fixture
def planned(tmp_path, renderer):
    svc = service(tmp_path, renderer, "planner.json")
    record = svc.upload((FIXTURES / "decks" / "golden12.pptx").read_bytes(), TITLE, "golden")
    assert record["status"] == "ingested"
    assert svc.plan("golden")["status"] == "planned"
    return svc


def test_plan_matches_golden(planned):
    assert planned.agenda("golden") == load(GOLDEN / "agenda.json")
    assert planned.actions("golden") == load(GOLDEN / "queue.json")
    deck = planned.deck("golden")
    assert [p["image"]["width"] for p in deck["pages"]] == [64] * 12


def test_scripted_session_matches_golden(planned, tmp_path, renderer):
    svc = service(tmp_path, renderer, "session.json")
    events = load(FIXTURES / "golden" / "session.json")["user"]
    svc.create_session("golden", "simulated-student", "sim-golden")
    said = 0
    while True:
        state = svc.session("sim-golden")
        if state["phase"] == "complete":
            break
        if state["phase"] in ("awaiting_user", "awaiting_solution"):
            event = events[said] if said < len(events) else {"type": "continue"}
            said += 1
            svc.post_event("sim-golden", event)
        else:
            svc.drive("sim-golden")
    assert svc.transcript("sim-golden") == load(GOLDEN / "transcript.json")


def test_queue_edits_through_bindings(planned):
    queue = planned.actions("golden")
    edit = {"op": "replace", "position": 1, "action": dict(queue["actions"][1], value={"script": "Hello."})}
    revised = planned.update_actions("golden", 1, [edit])
    assert revised["revision"] == 2
    with pytest.raises(slidetutor.SlideTutorError) as err:
        planned.update_actions("golden", 1, [edit])
    assert slidetutor.error_code(err.value) == "StaleRevision"
    swap = {"op": "replace", "position": 0, "action": queue["actions"][2]}
    with pytest.raises(slidetutor.SlideTutorError) as err:
        planned.update_actions("golden", 2, [swap])
    assert slidetutor.error_code(err.value) == "InvariantViolation"


def test_corrupt_upload(tmp_path, renderer):
    svc = service(tmp_path, renderer, "planner.json")
    with pytest.raises(slidetutor.SlideTutorError) as err:
        svc.upload((FIXTURES / "decks" / "corrupt.pptx").read_bytes(), "x")
    assert slidetutor.error_code(err.value) == "MalformedArchive"
