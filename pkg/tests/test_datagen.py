"""Procedural video generator: determinism, manifests, sampling, preprocessing."""
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microact.datagen import (
    CHANNEL_MEAN,
    CHANNEL_STD,
    ClipTensor,
    GenSpec,
    GenSpecError,
    bilinear_resize,
    class_counts,
    coarse_of_fine,
    dataset_taxonomy,
    desk_spec,
    generate_dataset,
    load_manifest,
    manifest_annotation,
    preprocess_clip,
    read_clip,
    sample_frames,
    segment_indices,
    split_counts,
)
from oracles import oracle_bilinear_resize

TINY = GenSpec(num_fine=4, num_coarse=2, clips_per_class=4, raw_frames=6,
               height=16, width=16, seed=5)
TINY_PRO = GenSpec(num_fine=4, num_coarse=2, clips_per_class=4, raw_frames=8,
                   height=24, width=16, seed=5, emotion_classes=3,
                   actions_per_clip=(1, 3))


class TestGenSpec:
    def test_validation_errors(self):
        with pytest.raises(GenSpecError, match="num_fine"):
            GenSpec(num_fine=2, num_coarse=3)
        with pytest.raises(GenSpecError, match="clips_per_class"):
            GenSpec(clips_per_class=3)
        with pytest.raises(GenSpecError, match="raw_frames"):
            GenSpec(raw_frames=0)
        with pytest.raises(GenSpecError, match="height/width"):
            GenSpec(height=4)
        with pytest.raises(GenSpecError, match="split_ratio"):
            GenSpec(split_ratio=(0, 1, 1))
        with pytest.raises(GenSpecError, match="actions_per_clip"):
            GenSpec(num_fine=4, emotion_classes=2, actions_per_clip=(0, 3))
        with pytest.raises(GenSpecError, match="requires emotion_classes"):
            GenSpec(num_fine=4, actions_per_clip=(1, 2))

    def test_json_roundtrip(self):
        for spec in (TINY, TINY_PRO):
            assert GenSpec.from_json(spec.to_json()) == spec

    def test_multi_label_flag(self):
        assert not TINY.multi_label
        assert TINY_PRO.multi_label

    def test_desk_spec_overrides(self):
        assert desk_spec().num_fine == 6
        assert desk_spec(seed=9).seed == 9


class TestClassCounts:
    def test_uniform(self):
        assert class_counts(TINY) == [4, 4, 4, 4]

    def test_long_tail_monotone_with_floor(self):
        spec = GenSpec(num_fine=6, num_coarse=2, clips_per_class=40,
                       long_tail_exponent=1.0)
        counts = class_counts(spec)
        assert counts[0] == 40
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert all(c >= 4 for c in counts)

    def test_split_counts_sum_and_bias(self):
        for n in range(4, 40):
            tr, va, te = split_counts(n, (2, 1, 1))
            assert tr + va + te == n
            assert tr >= va and tr >= te

    def test_coarse_of_fine_blocks(self):
        assert [coarse_of_fine(k, 8, 2) for k in range(8)] == [0] * 4 + [1] * 4
        assert [coarse_of_fine(k, 6, 3) for k in range(6)] == [0, 0, 1, 1, 2, 2]


@pytest.fixture(scope="module")
def single_ds(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds_single")
    summary = generate_dataset(TINY, root)
    return root, summary


@pytest.fixture(scope="module")
def pro_ds(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds_pro")
    generate_dataset(TINY_PRO, root)
    return root


class TestGenerateSingleLabel:
    @pytest.fixture
    def ds(self, single_ds):
        return single_ds

    def test_summary_and_manifest_agree(self, ds):
        root, summary = ds
        rows = load_manifest(root)
        assert summary["clips"] == len(rows) == 16
        assert not summary["multi_label"]
        assert summary["per_split"] == {"train": 8, "val": 4, "test": 4}

    def test_one_label_per_clip_and_balanced(self, ds):
        root, _ = ds
        rows = load_manifest(root)
        per_class = {}
        for r in rows:
            assert len(r["fine_ids"]) == 1
            per_class[r["fine_ids"][0]] = per_class.get(r["fine_ids"][0], 0) + 1
        assert per_class == {0: 4, 1: 4, 2: 4, 3: 4}

    def test_split_sizes_follow_ratio(self, ds):
        root, _ = ds
        rows = load_manifest(root)
        by_split = {"train": 0, "val": 0, "test": 0}
        for r in rows:
            by_split[r["split"]] += 1
        assert by_split == {"train": 8, "val": 4, "test": 4}

    def test_clip_files_match_manifest(self, ds):
        root, _ = ds
        for r in load_manifest(root):
            clip = read_clip(root, r["split"], r["clip_id"])
            assert clip.pixels.shape == (6, 16, 16, 3)
            assert clip.pixels.dtype == np.uint8

    def test_manifest_annotation_fields(self, ds):
        root, _ = ds
        ann = manifest_annotation(load_manifest(root)[0])
        assert ann.split in ("train", "val", "test")
        assert len(ann.fine_ids) == 1
        assert ann.emotion_id is None

    def test_dataset_taxonomy_matches_spec(self, ds):
        root, _ = ds
        tax = dataset_taxonomy(root)
        assert tax.num_fine == 4
        assert tax.num_coarse == 2


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_dataset(TINY, a)
        generate_dataset(TINY, b)
        rows = load_manifest(a)
        assert rows == load_manifest(b)
        for r in rows[:4]:
            ca = read_clip(a, r["split"], r["clip_id"])
            cb = read_clip(b, r["split"], r["clip_id"])
            assert np.array_equal(ca.pixels, cb.pixels)

    def test_different_seed_different_pixels(self, tmp_path):
        import dataclasses
        a, b = tmp_path / "a", tmp_path / "b"
        generate_dataset(TINY, a)
        generate_dataset(dataclasses.replace(TINY, seed=6), b)
        r = load_manifest(a)[0]
        ca = read_clip(a, r["split"], r["clip_id"])
        cb = read_clip(b, r["split"], r["clip_id"])
        assert not np.array_equal(ca.pixels, cb.pixels)


class TestGenerateMultiLabel:
    @pytest.fixture
    def ds(self, pro_ds):
        return pro_ds

    def test_label_sets_and_emotions(self, ds):
        rows = load_manifest(ds)
        for r in rows:
            assert 1 <= len(r["fine_ids"]) <= 3
            assert len(set(r["fine_ids"])) == len(r["fine_ids"])
            assert 0 <= r["emotion_id"] < 3

    def test_cooccurring_actions_share_one_group(self, ds):
        for r in load_manifest(ds):
            groups = {coarse_of_fine(k, 4, 2) for k in r["fine_ids"]}
            assert len(groups) == 1

    def test_face_box_inside_frame(self, ds):
        for r in load_manifest(ds):
            x, y, bw, bh = r["face_box"]
            assert x >= 0 and y >= 0 and bw > 0 and bh > 0
            assert x + bw <= 16 and y + bh <= 24

    def test_emotion_round_robin_is_balanced(self, ds):
        rows = load_manifest(ds)
        counts = {}
        for r in rows:
            counts[r["emotion_id"]] = counts.get(r["emotion_id"], 0) + 1
        assert max(counts.values()) - min(counts.values()) <= 1

    def test_face_region_differs_across_emotions(self, ds):
        rows = load_manifest(ds)
        by_emotion = {}
        for r in rows:
            if r["emotion_id"] not in by_emotion:
                by_emotion[r["emotion_id"]] = r
        crops = []
        for r in by_emotion.values():
            clip = read_clip(ds, r["split"], r["clip_id"])
            x, y, bw, bh = r["face_box"]
            crops.append(clip.pixels[0, y:y + bh, x:x + bw].astype(int))
        for i in range(len(crops)):
            for j in range(i + 1, len(crops)):
                assert np.abs(crops[i] - crops[j]).max() > 10


class TestSegmentIndices:
    def test_deterministic_centres(self):
        assert segment_indices(16, 8) == [1, 3, 5, 7, 9, 11, 13, 15]
        assert segment_indices(8, 8) == list(range(8))

    def test_short_clip_repeats(self):
        idx = segment_indices(3, 8)
        assert len(idx) == 8
        assert all(0 <= i < 3 for i in idx)

    @given(st.integers(1, 60), st.integers(1, 20), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=60, deadline=None)
    def test_random_sampling_stays_in_segments(self, num_raw, t, seed):
        rng = np.random.default_rng(seed)
        idx = segment_indices(num_raw, t, rng)
        assert len(idx) == t
        for i, v in enumerate(idx):
            start = i * num_raw // t
            end = (i + 1) * num_raw // t
            assert start <= v < max(end, start + 1)
        assert idx == sorted(idx)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            segment_indices(8, 0)
        with pytest.raises(ValueError):
            segment_indices(0, 4)

    def test_sample_frames_uses_segment_rule(self):
        pixels = np.arange(12, dtype=np.uint8).reshape(12, 1, 1, 1)
        pixels = np.repeat(np.repeat(pixels, 8, axis=1), 8, axis=2)
        pixels = np.repeat(pixels, 3, axis=3)
        clip = ClipTensor(pixels=pixels, fps=30, clip_id="c")
        out = sample_frames(clip, 4)
        expect = [pixels[i, 0, 0, 0] for i in segment_indices(12, 4)]
        assert [int(f[0, 0, 0]) for f in out.pixels] == expect


class TestBilinearResize:
    def test_identity_at_same_size(self):
        img = np.random.default_rng(0).uniform(0, 255, (9, 7, 3))
        assert np.allclose(bilinear_resize(img, 9, 7), img, atol=1e-12)

    def test_constant_image_stays_constant(self):
        img = np.full((8, 8, 3), 77.0)
        out = bilinear_resize(img, 17, 5)
        assert np.allclose(out, 77.0, atol=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        for hw in ((8, 8, 16, 16), (10, 6, 7, 9), (5, 5, 12, 3)):
            h, w, oh, ow = hw
            img = rng.uniform(0, 255, (h, w, 3))
            got = bilinear_resize(img, oh, ow)
            want = oracle_bilinear_resize(img, oh, ow)
            assert np.abs(got - want).max() < 1e-9

    def test_2x_upsample_interior_point(self):
        img = np.zeros((2, 2, 3))
        img[0, 0] = 0.0
        img[0, 1] = 100.0
        img[1, 0] = 100.0
        img[1, 1] = 200.0
        out = bilinear_resize(img, 4, 4)
        # output (1,1) maps to source (0.25, 0.25) under half-pixel centres:
        # 0.75^2*0 + 0.25*0.75*100*2 + 0.25^2*200 = 50
        assert abs(out[1, 1, 0] - 50.0) < 1e-9
        # corners clamp to the nearest source pixel
        assert abs(out[0, 0, 0] - 0.0) < 1e-9
        assert abs(out[3, 3, 0] - 200.0) < 1e-9


class TestPreprocessClip:
    def test_shape_and_dtype(self):
        pixels = np.random.default_rng(0).integers(0, 256, (4, 16, 12, 3), dtype=np.uint8)
        out = preprocess_clip(ClipTensor(pixels=pixels.astype(np.uint8)), side=32)
        assert out.shape == (4, 32, 32, 3)
        assert out.dtype == np.float32

    def test_normalization_constants(self):
        v = 200
        pixels = np.full((2, 16, 16, 3), v, dtype=np.uint8)
        out = preprocess_clip(ClipTensor(pixels=pixels), side=16)
        expect = (v / 255.0 - CHANNEL_MEAN) / CHANNEL_STD
        assert np.allclose(out, expect, atol=1e-6)

    def test_small_side_rejected(self):
        pixels = np.zeros((1, 8, 8, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="side"):
            preprocess_clip(ClipTensor(pixels=pixels), side=4)


class TestClipTensor:
    def test_validation(self):
        with pytest.raises(ValueError, match="shape"):
            ClipTensor(pixels=np.zeros((4, 8, 8), dtype=np.uint8))
        with pytest.raises(ValueError, match="uint8"):
            ClipTensor(pixels=np.zeros((4, 8, 8, 3), dtype=np.float32))
        with pytest.raises(ValueError, match="too small"):
            ClipTensor(pixels=np.zeros((1, 4, 8, 3), dtype=np.uint8))

    def test_num_frames(self):
        clip = ClipTensor(pixels=np.zeros((5, 8, 8, 3), dtype=np.uint8))
        assert clip.num_frames == 5


class TestManifestIO:
    def test_bad_manifest_line_reports_number(self, tmp_path):
        p = tmp_path / "manifest.jsonl"
        p.write_text('{"clip_id": "a"}\n{bad\n')
        with pytest.raises(ValueError, match=":2:"):
            load_manifest(tmp_path)

    def test_taxonomy_file_written(self, tmp_path):
        generate_dataset(TINY, tmp_path / "d")
        on_disk = json.loads((tmp_path / "d" / "taxonomy.json").read_text())
        assert len(on_disk["fine"]) == TINY.num_fine
        assert len(on_disk["coarse"]) == TINY.num_coarse
