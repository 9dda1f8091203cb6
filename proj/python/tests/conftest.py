import json
import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
TESTS = ROOT / "tests"
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"
SCHEMAS = ROOT / "schemas"


def load(path):
    return json.loads(pathlib.Path(path).read_text(encoding="utf-8"))


def tool(env_name, build_rel):
    value = os.environ.get(env_name)
    if value:
        return value
    candidate = ROOT / "build" / build_rel
    if candidate.exists():
        return str(candidate)
    pytest.skip(f"{env_name} is not set and {candidate} does not exist")


@pytest.fixture
def renderer():
    stub = tool("SLIDETUTOR_STUB_RENDERER", "tools/stub_renderer")
    return f"{stub} --input {{input}} --outdir {{outdir}} --width 64 --height 48"


@pytest.fixture
def cli():
    return tool("SLIDETUTOR_CLI", "tools/slidetutor")


@pytest.fixture(scope="session")
def validator():
    from jsonschema import Draft202012Validator
    from referencing import Registry, Resource

    schemas = {p.name.split(".")[0]: load(p) for p in SCHEMAS.glob("*.schema.json")}
    registry = Registry().with_resources(
        [(s["$id"], Resource.from_contents(s)) for s in schemas.values()]
    )

    def make(name):
        return Draft202012Validator(schemas[name], registry=registry)

    return make
