"""Augmentation planning, pixel transforms, and raster I/O."""

import numpy as np
import pytest

from fusekit.augment import (DEFAULT_CROP_FRACTION, FLIP_HORIZONTAL, IDENTITY,
                             OP_CYCLE, RANDOM_CROP, ROTATE90, ROTATE180,
                             ROTATE270, AugmentationPlan, DirectoryImageSink,
                             DirectoryImageSource, MemoryImageSink,
                             MemoryImageSource, TransformOp, apply,
                             execute_plan, parse_manifest, parse_op,
                             parse_plan, plan, read_ppm, write_manifest,
                             write_plan, write_ppm)
from fusekit.errors import FileFormatError, PlanError, ValidationError


def kinds(entry):
    return [op.kind for op in entry.ops]


class TestPlan:
    def test_counts_equal_targets_is_all_identity(self):
        p = plan({0: 3, 1: 2}, {0: 3, 1: 2}, seed=1)
        for entry in p.entries:
            assert kinds(entry) == [IDENTITY]
        assert p.class_totals == {0: 3, 1: 2}

    def test_round_robin_two_images_to_five(self):
        # per-image cycling: the first image absorbs the extra visit
        p = plan({1: ["a", "b"]}, {1: 5}, seed=1)
        assert [e.source_id for e in p.entries] == ["a", "b"]
        assert kinds(p.entries[0]) == [IDENTITY, FLIP_HORIZONTAL, ROTATE90]
        assert kinds(p.entries[1]) == [IDENTITY, FLIP_HORIZONTAL]

    def test_cycle_wraps_past_six_ops(self):
        p = plan({0: ["x"]}, {0: 8}, seed=3)
        assert kinds(p.entries[0]) == list(OP_CYCLE) + [IDENTITY,
                                                        FLIP_HORIZONTAL]

    def test_dataset_scale_totals(self):
        p = plan({0: 374, 1: 1372, 2: 254}, {0: 4600, 1: 8200, 2: 1500},
                 seed=42)
        assert p.class_totals == {0: 4600, 1: 8200, 2: 1500}
        assert p.total == 14300

    def test_fairness_within_one(self):
        rng = np.random.default_rng(83)
        for _ in range(50):
            count = int(rng.integers(1, 40))
            target = int(rng.integers(count, count * 9))
            p = plan({0: count}, {0: target}, seed=int(rng.integers(1 << 32)))
            per_image = [len(e.ops) for e in p.entries]
            assert sum(per_image) == target
            assert max(per_image) - min(per_image) <= 1

    def test_missing_target_defaults_to_count(self):
        p = plan({0: 4}, {}, seed=1)
        assert p.class_totals == {0: 4}

    def test_target_below_count_needs_flag(self):
        with pytest.raises(PlanError, match="subsampl"):
            plan({0: 5}, {0: 3}, seed=1)
        p = plan({0: ["a", "b", "c", "d", "e"]}, {0: 3}, seed=1,
                 subsample_allowed=True)
        assert [e.source_id for e in p.entries] == ["a", "b", "c"]
        assert all(kinds(e) == [IDENTITY] for e in p.entries)

    def test_empty_class_with_target_rejected(self):
        with pytest.raises(PlanError, match="no source images"):
            plan({0: 0}, {0: 5}, seed=1)
        with pytest.raises(PlanError, match="no source images"):
            plan({0: 3}, {7: 5}, seed=1)

    def test_crop_seeds_distinct_per_occurrence(self):
        p = plan({0: ["img"]}, {0: 18}, seed=9)
        crops = [op for op in p.entries[0].ops if op.kind == RANDOM_CROP]
        assert len(crops) == 3
        seeds = [op.seed for op in crops]
        assert len(set(seeds)) == 3
        assert all(op.fraction == DEFAULT_CROP_FRACTION for op in crops)

    def test_determinism(self):
        # targets deep enough that every image cycles through random_crop
        a = plan({0: 7, 2: 3}, {0: 49, 2: 21}, seed=5, crop_fraction=0.7)
        b = plan({0: 7, 2: 3}, {0: 49, 2: 21}, seed=5, crop_fraction=0.7)
        assert a == b
        c = plan({0: 7, 2: 3}, {0: 49, 2: 21}, seed=6, crop_fraction=0.7)
        assert a != c  # crop seeds differ

    def test_duplicate_ids_rejected(self):
        with pytest.raises(PlanError, match="duplicate"):
            plan({0: ["a", "a"]}, {0: 4}, seed=1)

    def test_bad_crop_fraction(self):
        with pytest.raises(PlanError, match="fraction"):
            plan({0: 2}, {0: 4}, seed=1, crop_fraction=0.0)


class TestTransforms:
    def test_rotate180_hand_grid(self):
        img = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        np.testing.assert_array_equal(apply(TransformOp(ROTATE180), img),
                                      [[4, 3], [2, 1]])

    def test_rotate90_is_counter_clockwise(self):
        img = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        # CCW: the right column becomes the top row
        np.testing.assert_array_equal(apply(TransformOp(ROTATE90), img),
                                      [[2, 4], [1, 3]])

    def test_group_laws_pixel_exact(self):
        rng = np.random.default_rng(89)
        for _ in range(100):
            h, w = rng.integers(1, 65, size=2)
            img = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            flip = TransformOp(FLIP_HORIZONTAL)
            np.testing.assert_array_equal(apply(flip, apply(flip, img)), img)
            r90 = img
            for _ in range(4):
                r90 = apply(TransformOp(ROTATE90), r90)
            np.testing.assert_array_equal(r90, img)
            r180 = apply(TransformOp(ROTATE180),
                         apply(TransformOp(ROTATE180), img))
            np.testing.assert_array_equal(r180, img)
            back = apply(TransformOp(ROTATE270), apply(TransformOp(ROTATE90), img))
            np.testing.assert_array_equal(back, img)

    def test_crop_window_size_and_determinism(self):
        rng = np.random.default_rng(97)
        for _ in range(50):
            h, w = rng.integers(4, 50, size=2)
            img = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            frac = float(rng.uniform(0.3, 1.0))
            op = TransformOp(RANDOM_CROP, frac, int(rng.integers(1 << 63)))
            ch, cw = int(frac * h), int(frac * w)
            if ch < 1 or cw < 1:
                continue
            out = apply(op, img)
            assert out.shape == (ch, cw, 3)
            np.testing.assert_array_equal(out, apply(op, img))

    def test_crop_is_a_true_subwindow(self):
        img = np.arange(100, dtype=np.uint8).reshape(10, 10)
        op = TransformOp(RANDOM_CROP, 0.5, 1234)
        out = apply(op, img)
        assert out.shape == (5, 5)
        # all rows consecutive within the source
        first = int(out[0, 0])
        oh, ow = divmod(first, 10)
        np.testing.assert_array_equal(out, img[oh:oh + 5, ow:ow + 5])

    def test_full_fraction_crop_is_identity(self):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4)
        out = apply(TransformOp(RANDOM_CROP, 1.0, 7), img)
        np.testing.assert_array_equal(out, img)

    def test_degenerate_crop_rejected(self):
        img = np.ones((2, 2), dtype=np.uint8)
        with pytest.raises(ValidationError, match="degenerate"):
            apply(TransformOp(RANDOM_CROP, 0.3, 1), img)

    def test_identity_returns_equal_copy(self):
        img = np.ones((3, 3), dtype=np.uint8)
        out = apply(TransformOp(IDENTITY), img)
        np.testing.assert_array_equal(out, img)
        out[0, 0] = 9
        assert img[0, 0] == 1

    def test_op_validation(self):
        with pytest.raises(ValidationError):
            TransformOp("sharpen")
        with pytest.raises(ValidationError):
            TransformOp(RANDOM_CROP)  # missing params
        with pytest.raises(ValidationError):
            TransformOp(IDENTITY, fraction=0.5)


class TestOpDescriptors:
    def test_round_trip_all_kinds(self):
        ops = [TransformOp(kind) for kind in OP_CYCLE if kind != RANDOM_CROP]
        ops.append(TransformOp(RANDOM_CROP, 0.8, 123456789))
        for op in ops:
            assert parse_op(op.descriptor()) == op

    def test_unknown_descriptor(self):
        with pytest.raises(ValidationError):
            parse_op("blur(radius=3)")


class TestPpm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(101)
        img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        path = tmp_path / "t.ppm"
        write_ppm(path, img)
        np.testing.assert_array_equal(read_ppm(path), img)

    def test_header_bytes(self, tmp_path):
        img = np.zeros((2, 3, 3), dtype=np.uint8)
        path = tmp_path / "t.ppm"
        write_ppm(path, img)
        assert path.read_bytes().startswith(b"P6\n3 2\n255\n")

    def test_comment_in_header_tolerated(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n# made by hand\n2 1\n255\n" + bytes(6))
        assert read_ppm(path).shape == (1, 2, 3)

    def test_truncated_pixels_rejected(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(FileFormatError, match="pixel bytes"):
            read_ppm(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
        with pytest.raises(FileFormatError, match="P6"):
            read_ppm(path)

    def test_grayscale_output_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="H, W, 3"):
            write_ppm(tmp_path / "g.ppm", np.zeros((2, 2), dtype=np.uint8))


class TestExecutePlan:
    def test_empty_plan_empty_manifest(self):
        manifest = execute_plan(AugmentationPlan(()), MemoryImageSource({}),
                                MemoryImageSink())
        assert manifest == []

    def test_one_entry_two_ops(self):
        img = np.arange(27, dtype=np.uint8).reshape(3, 3, 3)
        p = plan({0: ["pic"]}, {0: 2}, seed=1)
        sink = MemoryImageSink()
        manifest = execute_plan(p, MemoryImageSource({"pic": img}), sink)
        assert [r.output_id for r in manifest] == ["pic__a0000", "pic__a0001"]
        assert [r.op for r in manifest] == [IDENTITY, FLIP_HORIZONTAL]
        assert all(r.source_id == "pic" and r.class_index == 0
                   for r in manifest)
        np.testing.assert_array_equal(sink.images["pic__a0000"], img)
        np.testing.assert_array_equal(sink.images["pic__a0001"], img[:, ::-1])

    def test_unresolvable_id(self):
        p = plan({0: ["ghost"]}, {0: 1}, seed=1)
        with pytest.raises(PlanError, match="ghost"):
            execute_plan(p, MemoryImageSource({}), MemoryImageSink())

    def test_directory_round_trip(self, tmp_path):
        rng = np.random.default_rng(103)
        src_dir = tmp_path / "src"
        src_dir.mkdir()
        images = {}
        for c, name in ((0, "m0"), (1, "n0"), (1, "n1")):
            img = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
            images[name] = img
            write_ppm(src_dir / f"{name}.ppm", img)
        p = plan({0: ["m0"], 1: ["n0", "n1"]}, {0: 3, 1: 4}, seed=11)
        out_dir = tmp_path / "out"
        manifest = execute_plan(p, DirectoryImageSource(src_dir),
                                DirectoryImageSink(out_dir))
        assert len(manifest) == 7
        assert p.class_totals == {0: 3, 1: 4}
        for row in manifest:
            out = read_ppm(out_dir / f"{row.output_id}.ppm")
            expected = apply(parse_op(row.op), images[row.source_id])
            np.testing.assert_array_equal(out, expected)

    def test_deterministic_manifests(self, tmp_path):
        img = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
        p = plan({2: ["s"]}, {2: 13}, seed=21)
        m1 = execute_plan(p, MemoryImageSource({"s": img}), MemoryImageSink())
        m2 = execute_plan(p, MemoryImageSource({"s": img}), MemoryImageSink())
        assert m1 == m2


class TestPlanFiles:
    def test_plan_round_trip(self, tmp_path):
        p = plan({0: 3, 2: 2}, {0: 10, 2: 9}, seed=33)
        path = tmp_path / "plan.csv"
        write_plan(p, path)
        assert parse_plan(path) == p
        # byte-stable rewrite
        path2 = tmp_path / "plan2.csv"
        write_plan(parse_plan(path), path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_plan_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FileFormatError, match="header"):
            parse_plan(path)

    def test_manifest_round_trip(self, tmp_path):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        p = plan({1: ["z"]}, {1: 7}, seed=2)
        manifest = execute_plan(p, MemoryImageSource({"z": img}),
                                MemoryImageSink())
        path = tmp_path / "manifest.csv"
        write_manifest(manifest, path)
        assert parse_manifest(path) == manifest
