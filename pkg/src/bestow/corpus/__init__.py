"""Bundled calculus programs with their expected typing verdicts.

Each ``.bst`` file starts with a ``#variant`` pragma followed by a
``-- expect: <verdict>`` line, where the verdict is either the program's
type or the name of the error it must be rejected with.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional

from ..calculus.ast import Variant
from ..calculus.parser import split_pragma

_EXPECT = re.compile(r"^--\s*expect:\s*(\S.*?)\s*$", re.MULTILINE)
GROUPS = ("core", "transfer", "private", "rejects")


@dataclass(frozen=True)
class CorpusProgram:
    group: str
    name: str
    variant: Variant
    expect: str
    source: str

    @property
    def accepted(self) -> bool:
        return self.group != "rejects"


def load_corpus(group: Optional[str] = None) -> List[CorpusProgram]:
    groups = GROUPS if group is None else (group,)
    programs = []
    root = resources.files(__name__)
    for g in groups:
        for entry in sorted(root.joinpath(g).iterdir(), key=lambda p: p.name):
            if not entry.name.endswith(".bst"):
                continue
            source = entry.read_text(encoding="utf-8")
            variant, _ = split_pragma(source)
            match = _EXPECT.search(source)
            if match is None:
                raise ValueError(f"{g}/{entry.name} has no expect line")
            programs.append(CorpusProgram(g, entry.name[:-4], variant or Variant.CORE, match.group(1), source))
    return programs


def get_program(qualified: str) -> CorpusProgram:
    group, name = qualified.split("/", 1)
    for program in load_corpus(group):
        if program.name == name:
            return program
    raise KeyError(qualified)
