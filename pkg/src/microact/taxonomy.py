"""Two-level label system: coarse body-part groups and fine micro-action classes.

The taxonomy is loaded from a JSON file (see ``load_taxonomy``) and is immutable
afterwards, so a single instance can be shared freely across threads. The
shipped default file contains the class names that are spelled out in prose
sources plus clearly marked placeholders for the rest; it is data, not a claim
about any particular dataset's ground truth.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class TaxonomyError(ValueError):
    """Raised when a taxonomy file is malformed or violates an invariant."""


@dataclass(frozen=True)
class CoarseLabel:
    id: int
    name: str


@dataclass(frozen=True)
class FineLabel:
    id: int
    name: str
    words: tuple[str, ...]
    coarse_id: int


@dataclass(frozen=True)
class LabelTaxonomy:
    """Validated two-level label system.

    Invariants (enforced at construction):
      * coarse ids are 0..num_coarse-1, contiguous and unique
      * fine ids are 0..num_fine-1, contiguous and unique
      * every fine label references an existing coarse id
      * every fine label carries at least one word
    """

    fine_labels: tuple[FineLabel, ...]
    coarse_labels: tuple[CoarseLabel, ...]
    _fine_to_coarse: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        problems = _check_taxonomy(self.fine_labels, self.coarse_labels)
        if problems:
            raise TaxonomyError("; ".join(problems))
        object.__setattr__(
            self, "_fine_to_coarse", tuple(f.coarse_id for f in self.fine_labels)
        )

    @property
    def num_fine(self) -> int:
        return len(self.fine_labels)

    @property
    def num_coarse(self) -> int:
        return len(self.coarse_labels)

    def fine_name(self, fine_id: int) -> str:
        return self.fine_labels[fine_id].name

    def coarse_name(self, coarse_id: int) -> str:
        return self.coarse_labels[coarse_id].name


def _check_taxonomy(fine, coarse) -> list[str]:
    problems = []
    coarse_ids = [c.id for c in coarse]
    if sorted(coarse_ids) != list(range(len(coarse))):
        problems.append(
            f"coarse ids must be 0..{len(coarse) - 1} contiguous and unique, got {coarse_ids}"
        )
    fine_ids = [f.id for f in fine]
    if sorted(fine_ids) != list(range(len(fine))):
        problems.append(
            f"fine ids must be 0..{len(fine) - 1} contiguous and unique, got {fine_ids}"
        )
    valid_coarse = set(coarse_ids)
    for f in fine:
        if f.coarse_id not in valid_coarse:
            problems.append(
                f"fine label {f.id} ({f.name!r}): dangling coarse reference {f.coarse_id}"
            )
        if len(f.words) < 1:
            problems.append(f"fine label {f.id} ({f.name!r}): empty word list")
    if not fine:
        problems.append("taxonomy has no fine labels")
    if not coarse:
        problems.append("taxonomy has no coarse labels")
    return problems


def default_taxonomy_path() -> Path:
    """Path of the shipped 52-class / 7-group taxonomy file."""
    return Path(str(resources.files("microact").joinpath("data/ma52_default.json")))


def taxonomy_from_dict(raw: dict) -> LabelTaxonomy:
    """Build and validate a taxonomy from its JSON object form.

    Expected schema::

        {"coarse": [{"id", "name"}, ...],
         "fine":   [{"id", "name", "words", "coarse_id"}, ...]}

    ``words`` may be omitted, in which case the lowercase whitespace-split
    name is used (those tokens feed the label embedding).
    """
    if not isinstance(raw, dict) or "coarse" not in raw or "fine" not in raw:
        raise TaxonomyError("expected object with 'coarse' and 'fine' keys")

    def _coarse(i, obj):
        try:
            return CoarseLabel(id=int(obj["id"]), name=str(obj["name"]))
        except (KeyError, TypeError, ValueError) as e:
            raise TaxonomyError(f"coarse entry {i}: {e}")

    def _fine(i, obj):
        try:
            name = str(obj["name"])
            words = obj.get("words") or name.lower().split()
            return FineLabel(
                id=int(obj["id"]),
                name=name,
                words=tuple(str(w) for w in words),
                coarse_id=int(obj["coarse_id"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TaxonomyError(f"fine entry {i}: {e}")

    coarse = tuple(_coarse(i, o) for i, o in enumerate(raw["coarse"]))
    fine = tuple(_fine(i, o) for i, o in enumerate(raw["fine"]))
    return LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)


def taxonomy_to_dict(taxonomy: LabelTaxonomy) -> dict:
    """Inverse of taxonomy_from_dict."""
    return {
        "coarse": [{"id": c.id, "name": c.name} for c in taxonomy.coarse_labels],
        "fine": [
            {"id": f.id, "name": f.name, "words": list(f.words), "coarse_id": f.coarse_id}
            for f in taxonomy.fine_labels
        ],
    }


def load_taxonomy(path: str | Path) -> LabelTaxonomy:
    """Load and validate a taxonomy JSON file (schema: taxonomy_from_dict)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise TaxonomyError(f"{path}: file not found")
    except json.JSONDecodeError as e:
        raise TaxonomyError(f"{path}: parse failure: {e}")
    try:
        return taxonomy_from_dict(raw)
    except TaxonomyError as e:
        raise TaxonomyError(f"{path}: {e}")


def load_default_taxonomy() -> LabelTaxonomy:
    return load_taxonomy(default_taxonomy_path())


def coarse_of(taxonomy: LabelTaxonomy, fine_id: int) -> int:
    """Coarse body-part id of a fine micro-action id.

    Deterministic and taxonomy-pure: total over valid ids, raises on others.
    """
    if not 0 <= fine_id < taxonomy.num_fine:
        raise ValueError(f"fine_id {fine_id} out of range 0..{taxonomy.num_fine - 1}")
    return taxonomy._fine_to_coarse[fine_id]


# ---------------------------------------------------------------------------
# Annotations


@dataclass(frozen=True)
class Annotation:
    """One labelled clip.

    Single-label records (MA-52 style) have exactly one fine id and no emotion
    id; multi-label records (MA-52-Pro style) have >=1 fine ids plus an
    emotion id.
    """

    clip_id: str
    fine_ids: frozenset[int]
    split: str  # train | val | test
    emotion_id: int | None = None


SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    problems: tuple[str, ...] = ()


def validate_annotation(
    taxonomy: LabelTaxonomy,
    ann: Annotation,
    num_emotions: int | None = None,
) -> ValidationResult:
    """Check an annotation against the taxonomy; failures are returned, not raised."""
    problems = []
    if ann.split not in SPLITS:
        problems.append(f"unknown split {ann.split!r}")
    if not ann.fine_ids:
        problems.append("empty fine_ids set")
    for fid in sorted(ann.fine_ids):
        if not 0 <= fid < taxonomy.num_fine:
            problems.append(f"fine id {fid} out of range 0..{taxonomy.num_fine - 1}")
    if ann.emotion_id is None:
        if len(ann.fine_ids) > 1:
            problems.append("multi-label record requires an emotion_id")
    else:
        if ann.emotion_id < 0:
            problems.append(f"emotion id {ann.emotion_id} negative")
        elif num_emotions is not None and ann.emotion_id >= num_emotions:
            problems.append(
                f"emotion id {ann.emotion_id} out of range 0..{num_emotions - 1}"
            )
    return ValidationResult(ok=not problems, problems=tuple(problems))
