"""Bundled example formulas and models.

A ``.tl`` file holds one formula.  Leading ``#`` lines describe it; lines of
the form ``# key: value`` set metadata:

``semantics``   where the formula is meant to be read (``layered:k=3,depth=3``)
``expect``      ``SAT`` or ``UNSAT``
``executable``  ``no`` for formulas outside what the compiler handles
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import SchemaError, parse_model

_META = re.compile(r"#\s*([a-z-]+)\s*:\s*(.*?)\s*$")


@dataclass(frozen=True)
class Entry:
    name: str
    text: str
    meta: dict = field(default_factory=dict)

    @property
    def semantics(self):
        return self.meta.get("semantics")

    @property
    def expect(self):
        return self.meta.get("expect")

    @property
    def executable(self):
        return self.meta.get("executable", "yes") != "no"

    @property
    def description(self):
        lines = [ln.lstrip("#").strip() for ln in self.text.splitlines()
                 if ln.startswith("#") and not _META.match(ln)]
        return " ".join(lines)


def read_entry(path) -> Entry:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read: {e.strerror}", str(path)) from None
    meta = {}
    for line in text.splitlines():
        m = _META.match(line)
        if m:
            meta[m.group(1)] = m.group(2)
    return Entry(path.stem, text, meta)


def corpus_root():
    return Path(str(resources.files(__package__) / "corpus"))


def groups():
    return sorted(p.name for p in corpus_root().iterdir() if p.is_dir())


def entries(group):
    folder = corpus_root() / group
    if not folder.is_dir():
        raise SchemaError(f"no example group {group!r}; available: {', '.join(groups())}")
    return [read_entry(p) for p in sorted(folder.glob("*.tl"))]


def models(group):
    """Named models shipped with a group."""
    folder = corpus_root() / group
    return {p.stem: parse_model(p.read_text(encoding="utf-8"))
            for p in sorted(folder.glob("*.json"))}
