"""Packaged place and form-subdivision tables (editable JSON under ``data/``)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .authority_store import label_key


def _read(name: str) -> dict:
    return json.loads(resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Gazetteer:
    countries: frozenset[str]  # label keys
    regions: frozenset[str]
    # exception country key -> keys of its first-order divisions
    divisions: dict[str, frozenset[str]]
    display: dict[str, str]  # label key -> display form

    @classmethod
    def from_data(cls, gazetteer: dict, exceptions: dict) -> "Gazetteer":
        display = {}
        for name in [*gazetteer.get("countries", []), *gazetteer.get("regions", [])]:
            display[label_key(name)] = name
        divisions = {}
        for country, names in exceptions.items():
            if country.startswith("_"):
                continue
            display[label_key(country)] = country
            divisions[label_key(country)] = frozenset(label_key(n) for n in names)
            for n in names:
                display[label_key(n)] = n
        return cls(
            countries=frozenset(label_key(c) for c in gazetteer.get("countries", [])) | frozenset(divisions),
            regions=frozenset(label_key(r) for r in gazetteer.get("regions", [])),
            divisions=divisions,
            display=display,
        )

    @classmethod
    def load(cls, exceptions_path: str | Path | None = None) -> "Gazetteer":
        if exceptions_path is None:
            return default_gazetteer()
        with open(exceptions_path, encoding="utf-8") as fh:
            return cls.from_data(_read("gazetteer.json"), json.load(fh))

    def is_country(self, place: str) -> bool:
        return label_key(place) in self.countries

    def is_exception_country(self, place: str) -> bool:
        return label_key(place) in self.divisions

    def first_order_parent(self, place: str) -> str | None:
        """The exception country that *place* is a first-order division of."""
        key = label_key(place)
        for country, members in self.divisions.items():
            if key in members:
                return self.display[country]
        return None

    def is_place(self, place: str) -> bool:
        key = label_key(place)
        return key in self.countries or key in self.regions or self.first_order_parent(place) is not None


@lru_cache(maxsize=None)
def default_gazetteer() -> Gazetteer:
    return Gazetteer.from_data(_read("gazetteer.json"), _read("geo_exceptions.json"))


@lru_cache(maxsize=None)
def form_subdivisions() -> frozenset[str]:
    return frozenset(label_key(f) for f in _read("form_subdivisions.json")["forms"])
