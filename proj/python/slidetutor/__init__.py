"""Python access to the slidetutor core: ingest, planning and sessions."""

from __future__ import annotations

import json
from typing import Any, Optional

from . import _core

__all__ = [
    "SlideTutorError",
    "Service",
    "error_code",
    "parse_deck",
    "parse_outline",
    "render_outline",
    "prune",
    "parse_question_block",
    "grade_answer",
    "queue_problem",
    "profile_defaults",
]

SlideTutorError = _core.SlideTutorError


def error_code(err: BaseException) -> str:
    """The error code name, e.g. "MalformedArchive", taken from the message prefix."""
    return str(err).split(":", 1)[0]


def parse_deck(archive: bytes, title: str) -> dict:
    return json.loads(_core.parse_deck(archive, title))


def parse_outline(text: str) -> dict:
    return json.loads(_core.parse_outline(text))


def render_outline(agenda: dict, pruned: bool = False) -> str:
    return _core.render_outline(json.dumps(agenda), pruned)


def prune(agenda: dict, target: str) -> dict:
    return json.loads(_core.prune(json.dumps(agenda), target))


def parse_question_block(text: str) -> dict:
    return json.loads(_core.parse_question_block(text))


def grade_answer(item: dict, submission: list[int]) -> bool:
    return _core.grade_answer(json.dumps(item), list(submission))


def queue_problem(queue: dict, page_count: Optional[int] = None) -> Optional[str]:
    return _core.queue_problem(json.dumps(queue), page_count)


def profile_defaults(name: str) -> dict:
    return json.loads(_core.profile_defaults(name))


class Service:
    """In-process service; `config` uses the same keys as the JSON config file."""

    def __init__(self, config: dict[str, Any]):
        self._svc = _core.Service(json.dumps(config))

    def upload(self, archive: bytes, title: str, lecture_id: Optional[str] = None) -> dict:
        return json.loads(self._svc.upload(archive, title, lecture_id))

    def plan(self, lecture_id: str) -> dict:
        return json.loads(self._svc.plan(lecture_id))

    def lecture(self, lecture_id: str) -> dict:
        return json.loads(self._svc.lecture(lecture_id))

    def deck(self, lecture_id: str) -> dict:
        return json.loads(self._svc.deck(lecture_id))

    def agenda(self, lecture_id: str) -> dict:
        return json.loads(self._svc.agenda(lecture_id))

    def actions(self, lecture_id: str) -> dict:
        return json.loads(self._svc.actions(lecture_id))

    def publish(self, lecture_id: str) -> dict:
        return json.loads(self._svc.publish(lecture_id))

    def update_actions(self, lecture_id: str, revision: int, edits: list[dict]) -> dict:
        return json.loads(self._svc.update_actions(lecture_id, revision, json.dumps(edits)))

    def create_session(self, lecture_id: str, user_id: str = "anonymous", session_id: Optional[str] = None) -> dict:
        return json.loads(self._svc.create_session(lecture_id, user_id, session_id))

    def session(self, session_id: str) -> dict:
        return json.loads(self._svc.session(session_id))

    def post_event(self, session_id: str, event: dict) -> list[dict]:
        return json.loads(self._svc.post_event(session_id, json.dumps(event)))

    def drive(self, session_id: str) -> dict:
        return json.loads(self._svc.drive(session_id))

    def transcript(self, session_id: str) -> list[dict]:
        return json.loads(self._svc.transcript(session_id))
