"""The HTTP surface the lecture UI talks to, exercised against `slidetutor serve`."""

import json
import socket
import subprocess
import time

import pytest
import requests

from conftest import FIXTURES, GOLDEN, load

TOKEN = "test-token"


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def combined_fixture(path):
    planner = load(FIXTURES / "golden" / "planner.json")
    session = load(FIXTURES / "golden" / "session.json")["gateway"]
    scenarios = dict(planner["scenarios"])
    scenarios.update(session["scenarios"])
    rules = planner.get("expect_all", []) + [
        r for r in session.get("expect_all", []) if r["when"].get("profile") == "tutor"
    ]
    path.write_text(json.dumps({"scenarios": scenarios, "expect_all": rules}))
    return path


@pytest.fixture
def server(tmp_path, cli, renderer):
    port = free_port()
    proc = subprocess.Popen(
        [cli, "--store", str(tmp_path / "store"), "--renderer", renderer,
         "--fixture", str(combined_fixture(tmp_path / "fixture.json")),
         "serve", "--port", str(port), "--workers", "1"],
        env={"SLIDETUTOR_TOKEN": TOKEN, "PATH": "/usr/bin:/bin"},
        stdout=subprocess.DEVNULL,
        stderr=subprocess.PIPE,
    )
    base = f"http://127.0.0.1:{port}"
    for _ in range(200):
        try:
            requests.get(base + "/health", timeout=1)
            break
        except requests.ConnectionError:
            time.sleep(0.05)
    yield base
    proc.terminate()
    proc.wait(timeout=10)


def auth(**extra):
    return {"Authorization": f"Bearer {TOKEN}", **extra}


def sse_events(text):
    out = []
    for frame in text.split("\n\n"):
        fields = dict(line.split(": ", 1) for line in frame.splitlines() if ": " in line and not line.startswith(":"))
        if fields.get("event") == "utterance":
            out.append((int(fields["id"]), json.loads(fields["data"])))
    return out


def wait_for(base, session, predicate, timeout=30):
    deadline = time.time() + timeout
    while time.time() < deadline:
        hist = requests.get(f"{base}/sessions/{session}/history", headers=auth(), timeout=5).json()
        if predicate(hist):
            return hist
        time.sleep(0.05)
    raise AssertionError(f"session {session} did not reach the expected state")


def test_lecture_and_session_contract(server, validator):
    base = server
    assert requests.get(base + "/health").status_code == 200
    assert requests.get(base + "/lectures/golden").status_code == 401

    deck = (FIXTURES / "decks" / "golden12.pptx").read_bytes()
    up = requests.post(
        base + "/lectures",
        params={"id": "golden"},
        files={"file": ("golden12.pptx", deck), "title": (None, "Introduction to Machine Learning")},
        headers=auth(),
    )
    assert up.status_code == 201
    assert list(validator("lecture_record").iter_errors(up.json())) == []

    plan = requests.post(base + "/lectures/golden/plan", params={"wait": "1"}, headers=auth())
    assert plan.status_code == 200
    assert plan.json()["status"] == "planned"
    assert requests.get(base + "/lectures/golden/agenda", headers=auth()).json() == load(GOLDEN / "agenda.json")
    queue = requests.get(base + "/lectures/golden/actions", headers=auth()).json()
    assert queue == load(GOLDEN / "queue.json")

    bad = {"revision": 1, "edits": [{"op": "replace", "position": 0, "action": queue["actions"][2]}]}
    assert list(validator("queue_patch").iter_errors(bad)) == []
    resp = requests.patch(base + "/lectures/golden/actions", json=bad, headers=auth())
    assert resp.status_code == 422
    assert resp.json()["error"]["code"] == "InvariantViolation"

    created = requests.post(base + "/sessions", json={"lecture_id": "golden", "session_id": "ui"}, headers=auth())
    assert created.status_code == 201
    wait_for(base, "ui", lambda h: h["phase"] == "awaiting_user")

    stream = requests.get(base + "/sessions/ui/stream", params={"follow": "0"}, headers=auth())
    assert stream.headers["Content-Type"].startswith("text/event-stream")
    frames = sse_events(stream.text)
    assert [seq for seq, _ in frames] == [0, 1]
    for seq, env in frames:
        assert env["seq"] == seq
        assert list(validator("event_envelope").iter_errors(env)) == []

    said = requests.post(base + "/sessions/ui/events", json={"type": "say", "text": "Will there be homework in this course?"},
                         headers=auth())
    assert said.status_code == 202
    assert said.json()["events"][0]["seq"] == 2

    wrong = requests.post(base + "/sessions/ui/events", json={"type": "choose", "options": [0]}, headers=auth())
    assert wrong.status_code == 409

    hist = wait_for(base, "ui", lambda h: h["phase"] == "awaiting_user" and len(h["events"]) > 3)
    resumed = requests.get(base + "/sessions/ui/stream", params={"follow": "0"},
                           headers=auth(**{"Last-Event-ID": "2"}))
    assert [seq for seq, _ in sse_events(resumed.text)] == list(range(3, len(hist["events"])))
    assert all(step["calls"] <= 1 for step in hist["step_log"])
    golden = load(GOLDEN / "transcript.json")
    for env in hist["events"]:
        expected = dict(golden[env["seq"]])
        expected.pop("seq")
        assert env["utterance"]["content"] == expected["content"]
