"""JSON (de)serialization of system specs, presets, and content hashing."""

from __future__ import annotations

import hashlib
import json
import os

from .distributions import vector_law_from_dict, vector_law_to_dict
from .errors import SchemaError
from .presets import PRESETS
from .rifs import SpongeSpec


def spec_to_dict(spec: SpongeSpec) -> dict:
    return {
        "d": spec.d,
        "N": spec.N,
        "translations": [list(t) for t in spec.translations],
        "axis_laws": [vector_law_to_dict(v) for v in spec.axis_laws],
        "alpha_lo": spec.alpha_lo,
        "alpha_hi": spec.alpha_hi,
        "smooth_indices": list(spec.smooth_indices),
        "separated_indices": list(spec.separated_indices),
        "smoothing_lengths": list(spec.smoothing_lengths),
        "escape_lengths": list(spec.escape_lengths),
        "name": spec.name,
    }


def spec_from_dict(doc: dict) -> SpongeSpec:
    if not isinstance(doc, dict):
        raise SchemaError("spec document must be a JSON object")
    required = ("d", "N", "translations", "axis_laws", "alpha_lo", "alpha_hi",
                "smooth_indices", "separated_indices")
    for key in required:
        if key not in doc:
            raise SchemaError(f"spec document is missing field {key!r}")
    try:
        axis_laws = tuple(vector_law_from_dict(v) for v in doc["axis_laws"])
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(f"axis_laws: {exc}") from exc
    return SpongeSpec(
        d=int(doc["d"]),
        N=int(doc["N"]),
        translations=tuple(tuple(t) for t in doc["translations"]),
        axis_laws=axis_laws,
        alpha_lo=float(doc["alpha_lo"]),
        alpha_hi=float(doc["alpha_hi"]),
        smooth_indices=tuple(doc["smooth_indices"]),
        separated_indices=tuple(doc["separated_indices"]),
        smoothing_lengths=tuple(doc.get("smoothing_lengths", ())),
        escape_lengths=tuple(doc.get("escape_lengths", ())),
        name=str(doc.get("name", "")),
    )


def save_spec(spec: SpongeSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path_or_preset: str) -> SpongeSpec:
    """Resolve a preset name or load and validate a JSON spec document."""
    if path_or_preset in PRESETS:
        return PRESETS[path_or_preset]()
    if not os.path.exists(path_or_preset):
        raise SchemaError(
            f"{path_or_preset!r} is neither a preset ({', '.join(sorted(PRESETS))}) "
            "nor an existing file")
    with open(path_or_preset, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path_or_preset}: {exc}") from exc
    return spec_from_dict(doc)


def spec_hash(spec: SpongeSpec) -> str:
    """Stable 16-hex-digit content hash of the canonical spec document."""
    payload = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
