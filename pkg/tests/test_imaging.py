import numpy as np
import pytest

from glandseg.imaging import (
    Label,
    binarize_ground_truth,
    majority_label,
    pad_replicate,
    patch_grid,
    patch_label,
    sub_patch_offsets,
)


class TestBinarize:
    def test_zero_stays_black_everything_else_white(self):
        ann = np.array([[0, 1], [2, 7]])
        assert binarize_ground_truth(ann).tolist() == [[0, 1], [1, 1]]

    def test_all_zero(self):
        assert binarize_ground_truth(np.zeros((4, 4), dtype=int)).sum() == 0

    def test_white_count_matches_pixel_scan(self, rng):
        ann = rng.integers(0, 5, (37, 23))
        # independent pixel scan
        expected = sum(1 for v in ann.ravel() if v != 0)
        assert int(binarize_ground_truth(ann).sum()) == expected

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="empty"):
            binarize_ground_truth(np.zeros((0, 3), dtype=int))


class TestPadReplicate:
    def test_glas_sized_image(self, rng):
        img = rng.integers(0, 256, (522, 775, 3), dtype=np.uint8)
        out = pad_replicate(img, 21)
        assert out.shape == (525, 777, 3)
        # original content unchanged at the top-left corner
        assert np.array_equal(out[:522, :775], img)
        # replicated edges
        assert np.array_equal(out[522], out[521])
        assert np.array_equal(out[:, 775], out[:, 774])

    def test_exact_multiple_unchanged(self, rng):
        img = rng.integers(0, 256, (42, 21), dtype=np.uint8)
        assert np.array_equal(pad_replicate(img, 21), img)

    def test_single_pixel_to_constant_block(self):
        img = np.array([[9]], dtype=np.uint8)
        out = pad_replicate(img, 5)
        assert out.shape == (5, 5)
        assert (out == 9).all()

    def test_pad_then_crop_identity(self, rng):
        for _ in range(20):
            h, w = rng.integers(1, 60, 2)
            win = int(rng.integers(1, 25))
            img = rng.integers(0, 256, (h, w), dtype=np.uint8)
            out = pad_replicate(img, win)
            assert out.shape[0] % win == 0 and out.shape[1] % win == 0
            assert out.shape[0] - h < win and out.shape[1] - w < win
            assert np.array_equal(out[:h, :w], img)


class TestPatchGrid:
    def test_count_and_order(self):
        refs = patch_grid(42, 63, 21)
        assert len(refs) == 2 * 3
        assert [(r.x0, r.y0) for r in refs[:3]] == [(0, 0), (21, 0), (42, 0)]
        assert refs[3].y0 == 21

    def test_tiles_partition_the_raster(self, rng):
        h, w, win = 36, 48, 12
        cover = np.zeros((h, w), dtype=int)
        for r in patch_grid(h, w, win):
            cover[r.y0 : r.y0 + r.w, r.x0 : r.x0 + r.w] += 1
        assert (cover == 1).all()

    def test_unpadded_errors(self):
        with pytest.raises(ValueError, match="unpadded"):
            patch_grid(40, 42, 21)


class TestSubPatchOffsets:
    def test_pinned_cases(self):
        assert sub_patch_offsets(21, 11) == [0, 10]
        assert sub_patch_offsets(11, 5) == [0, 5, 6]
        assert sub_patch_offsets(40, 20) == [0, 20]
        assert sub_patch_offsets(5, 5) == [0]

    def test_child_larger_than_parent_errors(self):
        with pytest.raises(ValueError):
            sub_patch_offsets(5, 7)

    def test_exact_cover_exhaustive(self):
        # every (parent, child) pair up to 64: children tile the parent axis
        for parent in range(1, 65):
            for child in range(1, parent + 1):
                offsets = sub_patch_offsets(parent, child)
                covered = np.zeros(parent, dtype=bool)
                for o in offsets:
                    assert 0 <= o <= parent - child
                    covered[o : o + child] = True
                assert covered.all(), (parent, child, offsets)
                assert offsets == sorted(set(offsets))


class TestPatchLabels:
    def test_pure_and_mixed(self):
        assert patch_label(np.ones((3, 3), dtype=np.uint8)) is Label.GLAND
        assert patch_label(np.zeros((3, 3), dtype=np.uint8)) is Label.NONGLAND
        region = np.zeros((3, 3), dtype=np.uint8)
        region[1, 1] = 1
        assert patch_label(region) is Label.MIX

    def test_majority(self):
        region = np.zeros((5, 5), dtype=np.uint8)
        region.ravel()[:13] = 1
        assert majority_label(region) is Label.GLAND
        region.ravel()[:25] = 0
        region.ravel()[:12] = 1
        assert majority_label(region) is Label.NONGLAND

    def test_majority_tie_goes_nongland(self):
        region = np.zeros((4, 4), dtype=np.uint8)
        region.ravel()[:8] = 1
        assert majority_label(region) is Label.NONGLAND

    def test_pure_labels_imply_same_majority(self, rng):
        for _ in range(50):
            region = (rng.random((6, 6)) < rng.random()).astype(np.uint8)
            lab = patch_label(region)
            if lab is not Label.MIX:
                assert majority_label(region) is lab

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="empty"):
            patch_label(np.zeros((0,), dtype=np.uint8))
        with pytest.raises(ValueError, match="empty"):
            majority_label(np.zeros((0,), dtype=np.uint8))
