"""Slide archives read with zipfile and ElementTree, compared with the core parser."""

import collections
import posixpath
import re
import xml.etree.ElementTree as ET
import zipfile

import pytest

import slidetutor
from conftest import FIXTURES

NS = {
    "p": "http://schemas.openxmlformats.org/presentationml/2006/main",
    "a": "http://schemas.openxmlformats.org/drawingml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "rel": "http://schemas.openxmlformats.org/package/2006/relationships",
}


def oracle(path):
    with zipfile.ZipFile(path) as z:
        pres = ET.fromstring(z.read("ppt/presentation.xml"))
        rels = ET.fromstring(z.read("ppt/_rels/presentation.xml.rels"))
        targets = {r.get("Id"): r.get("Target") for r in rels.findall("rel:Relationship", NS)}
        pages = []
        for sld in pres.find("p:sldIdLst", NS).findall("p:sldId", NS):
            target = posixpath.normpath(posixpath.join("ppt", targets[sld.get(f"{{{NS['r']}}}id")]))
            slide = ET.fromstring(z.read(target))
            blocks = []
            for para in slide.iter(f"{{{NS['a']}}}p"):
                text = "".join(t.text or "" for t in para.iter(f"{{{NS['a']}}}t"))
                text = re.sub(r"\s+", " ", text).strip()
                if text:
                    blocks.append(text)
            pages.append((posixpath.splitext(posixpath.basename(target))[0], blocks))
        return pages


@pytest.mark.parametrize("name", ["hello", "abc", "reading_order", "golden12"])
def test_pages_and_text_match_the_oracle(name):
    path = FIXTURES / "decks" / f"{name}.pptx"
    deck = slidetutor.parse_deck(path.read_bytes(), name)
    expected = oracle(path)
    assert [p["index"] for p in deck["pages"]] == list(range(len(expected)))
    assert [p["page_id"] for p in deck["pages"]] == [pid for pid, _ in expected]
    for page, (_, blocks) in zip(deck["pages"], expected):
        assert collections.Counter(page["text_blocks"]) == collections.Counter(blocks)
        assert page["image"] is None


@pytest.mark.parametrize(
    "name,code",
    [("corrupt", "MalformedArchive"), ("missing_presentation", "MalformedArchive"), ("empty", "EmptyDeck")],
)
def test_bad_archives(name, code):
    data = (FIXTURES / "decks" / f"{name}.pptx").read_bytes()
    with pytest.raises(slidetutor.SlideTutorError) as err:
        slidetutor.parse_deck(data, name)
    assert slidetutor.error_code(err.value) == code
