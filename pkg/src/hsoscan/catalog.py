"""Categorized method/field signatures: taint sources, sensitive APIs and the
native/dynamic-loading/reflection/service call families."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

CATEGORIES = ("sources", "sensitive", "native", "dynload", "reflect", "service", "source_fields")

# Names reported by classify(); the JSON keys are plural.
CATEGORY_NAMES = {
    "sources": "source",
    "sensitive": "sensitive",
    "native": "native",
    "dynload": "dynload",
    "reflect": "reflect",
    "service": "service",
    "source_fields": "source_field",
}

RESERVED_CLASSES = ("IfClass", "BuildClass")

# Receiver class -> trigger family used for reporting.
FAMILIES = {
    "Db": "Database",
    "Net": "Internet",
    "Http": "Internet",
    "Build": "Build",
    "BuildClass": "Build",
    "Tel": "Telephony",
    "Sms": "Telephony",
    "Conn": "Connectivity",
    "Gps": "Location",
    "Wifi": "Wi-Fi",
    "Power": "Power",
    "Audio": "Audio",
    "Cam": "Camera",
    "Sys": "System",
}

_SIG_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\.[A-Za-z_][A-Za-z0-9_]*$")


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Catalog:
    sources: frozenset[str] = frozenset()
    sensitive: frozenset[str] = frozenset()
    native: frozenset[str] = frozenset()
    dynload: frozenset[str] = frozenset()
    reflect: frozenset[str] = frozenset()
    service: frozenset[str] = frozenset()
    source_fields: frozenset[str] = frozenset()

    @classmethod
    def from_dict(cls, data: dict) -> "Catalog":
        if not isinstance(data, dict):
            raise CatalogError("catalog must be a JSON object")
        unknown = set(data) - set(CATEGORIES)
        if unknown:
            raise CatalogError(f"unknown catalog field {sorted(unknown)[0]!r}")
        sets = {}
        for key in CATEGORIES:
            values = data.get(key, [])
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise CatalogError(f"field {key!r} must be an array of strings")
            for v in values:
                if not _SIG_RE.match(v):
                    raise CatalogError(f"field {key!r}: malformed signature {v!r}")
                if v.split(".", 1)[0] in RESERVED_CLASSES:
                    raise CatalogError(f"field {key!r}: reserved instrumentation name {v!r}")
            sets[key] = frozenset(values)
        return cls(**sets)

    def to_dict(self) -> dict:
        return {k: sorted(getattr(self, k)) for k in CATEGORIES}

    def classify(self, sig: str) -> set[str]:
        return {CATEGORY_NAMES[k] for k in CATEGORIES if sig in getattr(self, k)}

    def with_sources(self, extra) -> "Catalog":
        return Catalog(**{**{k: getattr(self, k) for k in CATEGORIES},
                          "sources": self.sources | frozenset(extra)})


def classify(cat: Catalog, sig: str) -> set[str]:
    return cat.classify(sig)


def load_catalog(path: Union[str, Path]) -> Catalog:
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise CatalogError(f"{path}: {e}") from None
    return Catalog.from_dict(data)


def default_catalog() -> Catalog:
    text = resources.files("hsoscan").joinpath("data/default_catalog.json").read_text("utf-8")
    return Catalog.from_dict(json.loads(text))


def family(sig: str) -> str:
    """Reporting family of a source signature, by receiver class."""
    cls = sig.split(".", 1)[0]
    return FAMILIES.get(cls, cls)
