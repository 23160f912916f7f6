"""Label-system construction, validation, and annotation checks."""
import json

import pytest

from microact.taxonomy import (
    Annotation,
    CoarseLabel,
    FineLabel,
    LabelTaxonomy,
    TaxonomyError,
    coarse_of,
    load_default_taxonomy,
    load_taxonomy,
    taxonomy_from_dict,
    taxonomy_to_dict,
    validate_annotation,
)


def tiny_taxonomy(num_fine=4, num_coarse=2):
    coarse = tuple(CoarseLabel(id=g, name=f"group {g}") for g in range(num_coarse))
    fine = tuple(
        FineLabel(id=k, name=f"act {k}", words=(f"act{k}",), coarse_id=k % num_coarse)
        for k in range(num_fine)
    )
    return LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)


class TestConstruction:
    def test_counts_and_names(self):
        tax = tiny_taxonomy(6, 3)
        assert tax.num_fine == 6
        assert tax.num_coarse == 3
        assert tax.fine_name(2) == "act 2"
        assert tax.coarse_name(1) == "group 1"

    def test_noncontiguous_fine_ids_rejected(self):
        coarse = (CoarseLabel(0, "g"),)
        fine = (
            FineLabel(0, "a", ("a",), 0),
            FineLabel(2, "b", ("b",), 0),
        )
        with pytest.raises(TaxonomyError, match="fine ids"):
            LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)

    def test_duplicate_coarse_ids_rejected(self):
        coarse = (CoarseLabel(0, "g"), CoarseLabel(0, "h"))
        fine = (FineLabel(0, "a", ("a",), 0),)
        with pytest.raises(TaxonomyError, match="coarse ids"):
            LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)

    def test_dangling_coarse_reference_rejected(self):
        coarse = (CoarseLabel(0, "g"),)
        fine = (FineLabel(0, "a", ("a",), 7),)
        with pytest.raises(TaxonomyError, match="dangling"):
            LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)

    def test_empty_word_list_rejected(self):
        coarse = (CoarseLabel(0, "g"),)
        fine = (FineLabel(0, "a", (), 0),)
        with pytest.raises(TaxonomyError, match="empty word list"):
            LabelTaxonomy(fine_labels=fine, coarse_labels=coarse)

    def test_empty_taxonomy_rejected(self):
        with pytest.raises(TaxonomyError):
            LabelTaxonomy(fine_labels=(), coarse_labels=())


class TestDefaultTaxonomy:
    def test_shipped_file_is_52_by_7(self):
        tax = load_default_taxonomy()
        assert tax.num_fine == 52
        assert tax.num_coarse == 7

    def test_every_fine_label_has_words(self):
        tax = load_default_taxonomy()
        assert all(len(f.words) >= 1 for f in tax.fine_labels)

    def test_coarse_of_covers_every_fine_id(self):
        tax = load_default_taxonomy()
        for k in range(tax.num_fine):
            assert 0 <= coarse_of(tax, k) < tax.num_coarse


class TestCoarseOf:
    def test_maps_by_fine_label_field(self):
        tax = tiny_taxonomy(4, 2)
        assert [coarse_of(tax, k) for k in range(4)] == [0, 1, 0, 1]

    def test_out_of_range_raises(self):
        tax = tiny_taxonomy()
        with pytest.raises(ValueError, match="out of range"):
            coarse_of(tax, -1)
        with pytest.raises(ValueError, match="out of range"):
            coarse_of(tax, tax.num_fine)


class TestDictRoundtrip:
    def test_to_from_dict_is_identity(self):
        tax = tiny_taxonomy(5, 2)
        again = taxonomy_from_dict(taxonomy_to_dict(tax))
        assert again == tax

    def test_words_default_to_split_name(self):
        raw = {
            "coarse": [{"id": 0, "name": "body"}],
            "fine": [{"id": 0, "name": "Shaking Legs", "coarse_id": 0}],
        }
        tax = taxonomy_from_dict(raw)
        assert tax.fine_labels[0].words == ("shaking", "legs")

    def test_missing_keys_rejected(self):
        with pytest.raises(TaxonomyError, match="coarse"):
            taxonomy_from_dict({"fine": []})

    def test_malformed_entry_reports_index(self):
        raw = {
            "coarse": [{"id": 0, "name": "g"}],
            "fine": [{"id": 0, "name": "a", "coarse_id": 0}, {"name": "b"}],
        }
        with pytest.raises(TaxonomyError, match="fine entry 1"):
            taxonomy_from_dict(raw)


class TestLoadTaxonomy:
    def test_missing_file(self, tmp_path):
        with pytest.raises(TaxonomyError, match="not found"):
            load_taxonomy(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(TaxonomyError, match="parse failure"):
            load_taxonomy(p)

    def test_valid_file_roundtrip(self, tmp_path):
        tax = tiny_taxonomy()
        p = tmp_path / "tax.json"
        p.write_text(json.dumps(taxonomy_to_dict(tax)))
        assert load_taxonomy(p) == tax


class TestValidateAnnotation:
    def test_valid_single_label(self):
        tax = tiny_taxonomy()
        ann = Annotation(clip_id="c0", fine_ids=frozenset({1}), split="train")
        assert validate_annotation(tax, ann).ok

    def test_bad_split(self):
        tax = tiny_taxonomy()
        ann = Annotation(clip_id="c0", fine_ids=frozenset({1}), split="dev")
        res = validate_annotation(tax, ann)
        assert not res.ok and any("split" in p for p in res.problems)

    def test_empty_fine_ids(self):
        tax = tiny_taxonomy()
        ann = Annotation(clip_id="c0", fine_ids=frozenset(), split="test")
        res = validate_annotation(tax, ann)
        assert not res.ok and any("empty" in p for p in res.problems)

    def test_fine_id_out_of_range(self):
        tax = tiny_taxonomy(4)
        ann = Annotation(clip_id="c0", fine_ids=frozenset({9}), split="val")
        res = validate_annotation(tax, ann)
        assert not res.ok and any("out of range" in p for p in res.problems)

    def test_multi_label_requires_emotion(self):
        tax = tiny_taxonomy()
        ann = Annotation(clip_id="c0", fine_ids=frozenset({0, 1}), split="train")
        res = validate_annotation(tax, ann)
        assert not res.ok and any("emotion" in p for p in res.problems)

    def test_emotion_id_range(self):
        tax = tiny_taxonomy()
        ann = Annotation(
            clip_id="c0", fine_ids=frozenset({0, 1}), split="train", emotion_id=5
        )
        assert validate_annotation(tax, ann, num_emotions=None).ok
        res = validate_annotation(tax, ann, num_emotions=5)
        assert not res.ok and any("out of range" in p for p in res.problems)

    def test_negative_emotion_id(self):
        tax = tiny_taxonomy()
        ann = Annotation(
            clip_id="c0", fine_ids=frozenset({0}), split="train", emotion_id=-1
        )
        res = validate_annotation(tax, ann)
        assert not res.ok and any("negative" in p for p in res.problems)
