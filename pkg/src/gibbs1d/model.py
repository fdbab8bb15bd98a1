"""JSON model documents: potential terms plus named channels.

The accepted format is fixed by ``model.schema.json`` next to this module;
unknown fields are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ModelError
from .lattice import Alphabet
from .potential import (
    ExponentialPair,
    FiniteRangeTable,
    Potential,
    PowerLawPair,
    SingleSiteField,
    TruncationSpec,
    auto_truncation,
    truncation,
)
from .transform import DetMap, SiteKernel, identity_map


class ModelNotFoundError(ModelError):
    pass


def model_schema() -> dict:
    return json.loads(resources.files("gibbs1d").joinpath("model.schema.json").read_text())


def shipped_model_path(name: str) -> Path:
    """Path of a model document shipped with the package (``name`` without ``.json``)."""
    return Path(str(resources.files("gibbs1d").joinpath("models", f"{name}.json")))


@dataclass(frozen=True, eq=False)
class Model:
    name: str
    potential: Potential
    channels: dict
    default_channel: str | None
    truncation_radius: int | None
    document: dict = field(repr=False)
    digest: str = ""

    def channel(self, name: str | None = None):
        key = name or self.default_channel
        if key is None:
            raise ModelError("model defines no channel; pass --channel identity or add one")
        try:
            return self.channels[key]
        except KeyError:
            raise ModelError(f"unknown channel {key!r}; available: {sorted(self.channels)}") from None

    def truncation(self, radius: int | None = None) -> TruncationSpec:
        r = radius if radius is not None else self.truncation_radius
        return auto_truncation(self.potential) if r is None else truncation(self.potential, r)


def _term(alphabet: Alphabet, spec: dict):
    fam = spec["family"]
    if fam == "exponential-pair":
        return ExponentialPair(alphabet, float(spec["coupling"]), float(spec["rate"]))
    if fam == "power-law-pair":
        return PowerLawPair(alphabet, float(spec["coupling"]), float(spec["exponent"]))
    if fam == "single-site-field":
        return SingleSiteField(alphabet, tuple(spec["field"]))
    entries = tuple(
        (tuple(alphabet.index(s) for s in e["config"]), float(e["value"])) for e in spec["entries"]
    )
    return FiniteRangeTable(alphabet, entries)


def _channel(alphabet: Alphabet, spec: dict):
    target = Alphabet(tuple(spec["target"]))
    if spec["type"] == "kernel":
        return SiteKernel(alphabet, target, tuple(tuple(r) for r in spec["matrix"]))
    missing = [s for s in alphabet.symbols if s not in spec["map"]]
    if missing or set(spec["map"]) - set(alphabet.symbols):
        raise ModelError("map must list every source symbol and nothing else")
    return DetMap.from_symbols(alphabet, target, spec["map"])


def model_from_document(doc: dict, name: str = "model") -> Model:
    try:
        jsonschema.validate(doc, model_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ModelError(f"invalid model document at {where}: {e.message}") from None
    values = doc.get("spin_values")
    alphabet = Alphabet(tuple(doc["alphabet"]), tuple(values) if values is not None else None)
    potential = Potential(alphabet, tuple(_term(alphabet, t) for t in doc["terms"]))
    channels = {"identity": identity_map(alphabet)}
    default = None
    if "channel" in doc:
        channels["default"] = _channel(alphabet, doc["channel"])
        default = "default"
    for key, spec in sorted(doc.get("channels", {}).items()):
        channels[key] = _channel(alphabet, spec)
        default = default or key
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return Model(
        name=doc.get("name", name),
        potential=potential,
        channels=channels,
        default_channel=default,
        truncation_radius=doc.get("truncation"),
        document=doc,
        digest=hashlib.sha256(canonical.encode()).hexdigest(),
    )


def load_model(path) -> Model:
    p = Path(path)
    if not p.is_file():
        raise ModelNotFoundError(f"model not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ModelError(f"model {path} is not valid JSON: {e}") from None
    return model_from_document(doc, p.stem)
