import random

import pytest

import slidetutor
from conftest import FIXTURES, load

SAMPLE = "- Course\n-- Basics\n--- page zero\n--- page one\n-- Advanced\n--- page two"


def test_outline_round_trip_and_prune():
    agenda = slidetutor.parse_outline(SAMPLE)
    assert agenda["leaf_count"] == 3
    assert slidetutor.render_outline(agenda) == SAMPLE
    view = slidetutor.prune(agenda, "p2")
    assert slidetutor.render_outline(view) == "- Course\n-- Basics\n-- Advanced\n--- page two"
    assert slidetutor.render_outline(agenda, pruned=True) == slidetutor.render_outline(view)


def random_outline(rng, nodes):
    lines = ["- Root"]
    depth = 1
    for i in range(nodes):
        depth = rng.randint(2, depth + 1)
        lines.append("-" * depth + f" item {i}")
    return "\n".join(lines)


def test_random_outlines_survive_a_round_trip():
    rng = random.Random(5)
    for _ in range(100):
        text = random_outline(rng, rng.randint(1, 30))
        agenda = slidetutor.parse_outline(text)
        assert slidetutor.render_outline(agenda) == text


def test_example_questions_and_grading():
    fx = load(FIXTURES / "example_actions.json")
    parsed = slidetutor.parse_question_block(fx["question_reply"])
    assert parsed["failures"] == []
    assert parsed["items"] == fx["questions"]
    multi = parsed["items"][0]
    assert slidetutor.grade_answer(multi, [1, 0])
    assert not slidetutor.grade_answer(multi, [0])
    with pytest.raises(slidetutor.SlideTutorError) as err:
        slidetutor.grade_answer(multi, [9])
    assert slidetutor.error_code(err.value) == "BadIndex"


def test_queue_problems():
    queue = {
        "lecture_id": "x",
        "revision": 1,
        "actions": [
            {"kind": "ShowFile", "value": {"file_id": 0}, "origin_leaf": "p0"},
            {"kind": "ReadScript", "value": {"script": "hi"}, "origin_leaf": "p0"},
        ],
    }
    assert slidetutor.queue_problem(queue) is None
    assert slidetutor.queue_problem(queue, page_count=0) is not None
    queue["actions"].reverse()
    assert "before its ShowFile" in slidetutor.queue_problem(queue)


def test_profiles():
    assert slidetutor.profile_defaults("planner")["max_tokens"] == 4096
    tutor = slidetutor.profile_defaults("tutor")
    assert (tutor["temperature"], tutor["top_p"], tutor["max_tokens"]) == (0.95, 0.7, 1024)
