import numpy as np
import pytest

from contourkit.annotate import LabelVolume
from contourkit.errors import NeedTwoKeys, UnsortedKeys
from contourkit.interp import interpolate_slices, signed_distance
from contourkit.volume import Axis


def brute_force_sdf(mask, spacing=(1.0, 1.0)):
    """All-pairs oracle: +min distance to a set voxel outside, -min distance
    to an unset voxel inside (center-to-center, mm)."""
    mask = np.asarray(mask, dtype=bool)
    su, sv = spacing
    ins = np.argwhere(mask).astype(float)
    outs = np.argwhere(~mask).astype(float)
    sdf = np.zeros(mask.shape)
    for i in range(mask.shape[0]):
        for j in range(mask.shape[1]):
            p = np.array([i, j], dtype=float)
            if mask[i, j]:
                d = np.sqrt((((outs - p) * [su, sv]) ** 2).sum(axis=1)).min()
                sdf[i, j] = -d
            else:
                d = np.sqrt((((ins - p) * [su, sv]) ** 2).sum(axis=1)).min()
                sdf[i, j] = d
    return sdf


def disc_mask(shape, center, radius, spacing=(1.0, 1.0)):
    us = np.arange(shape[0]) * spacing[0]
    vs = np.arange(shape[1]) * spacing[1]
    return ((us[:, None] - center[0]) ** 2 + (vs[None, :] - center[1]) ** 2) <= radius ** 2


class TestSignedDistance:
    def test_single_voxel_values(self):
        mask = np.zeros((7, 7), dtype=bool)
        mask[3, 3] = True
        sdf = signed_distance(mask).grid
        assert sdf[3, 3] == pytest.approx(-1.0)   # nearest unset center
        assert sdf[3, 4] == pytest.approx(1.0)
        assert sdf[3, 2] == pytest.approx(1.0)
        assert sdf[2, 2] == pytest.approx(np.sqrt(2))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            mask = rng.random((9, 8)) < 0.4
            if not mask.any() or mask.all():
                continue
            got = signed_distance(mask, (0.8, 1.1)).grid
            want = brute_force_sdf(mask, (0.8, 1.1))
            assert np.allclose(got, want, atol=1e-9)

    def test_empty_is_positive_sentinel(self):
        sdf = signed_distance(np.zeros((5, 5), dtype=bool)).grid
        assert np.all(sdf > 0)
        assert np.all(sdf == sdf[0, 0])

    def test_full_is_nonpositive(self):
        sdf = signed_distance(np.ones((5, 5), dtype=bool)).grid
        assert np.all(sdf <= 0)

    def test_sign_matches_mask(self):
        rng = np.random.default_rng(1)
        mask = rng.random((10, 10)) < 0.5
        sdf = signed_distance(mask).grid
        assert np.array_equal(sdf < 0, mask)


class TestInterpolateSlices:
    def make_mask(self, nz=11, shape=(32, 32)):
        return LabelVolume((shape[0], shape[1], nz))

    def test_identical_keys_constant(self):
        m = self.make_mask()
        disc = disc_mask((32, 32), (15.0, 15.0), 6.0)
        m.bits[:, :, 0] = disc
        m.bits[:, :, 10] = disc
        interpolate_slices(m, Axis.TRANSVERSE, [0, 10])
        for k in range(11):
            assert np.array_equal(m.bits[:, :, k], disc), k

    def test_growing_circle_midpoint(self):
        m = self.make_mask()
        m.bits[:, :, 0] = disc_mask((32, 32), (15.0, 15.0), 4.0)
        m.bits[:, :, 10] = disc_mask((32, 32), (15.0, 15.0), 8.0)
        interpolate_slices(m, Axis.TRANSVERSE, [0, 10])
        got = m.bits[:, :, 5]
        want = disc_mask((32, 32), (15.0, 15.0), 6.0)
        # within one voxel Hausdorff of the analytic 6 mm disc
        diff = got ^ want
        if diff.any():
            centers = np.argwhere(diff).astype(float)
            other = np.argwhere(want if diff[~want].any() else got)
            for c in centers:
                d = np.sqrt(((np.argwhere(want) - c) ** 2).sum(axis=1)).min()
                d2 = np.sqrt(((np.argwhere(got) - c) ** 2).sum(axis=1)).min()
                assert min(d, d2) <= 1.0

    def test_single_key_raises(self):
        m = self.make_mask()
        with pytest.raises(NeedTwoKeys):
            interpolate_slices(m, Axis.TRANSVERSE, [3])

    def test_unsorted_keys(self):
        m = self.make_mask()
        with pytest.raises(UnsortedKeys):
            interpolate_slices(m, Axis.TRANSVERSE, [5, 2])

    def test_keys_bit_identical(self):
        rng = np.random.default_rng(2)
        m = self.make_mask()
        a = rng.random((32, 32)) < 0.3
        b = rng.random((32, 32)) < 0.3
        m.bits[:, :, 2] = a
        m.bits[:, :, 8] = b
        interpolate_slices(m, Axis.TRANSVERSE, [2, 8])
        assert np.array_equal(m.bits[:, :, 2], a)
        assert np.array_equal(m.bits[:, :, 8], b)

    def test_outside_keys_untouched(self):
        m = self.make_mask()
        sentinel = disc_mask((32, 32), (4.0, 4.0), 2.0)
        m.bits[:, :, 0] = sentinel
        m.bits[:, :, 3] = disc_mask((32, 32), (15.0, 15.0), 5.0)
        m.bits[:, :, 7] = disc_mask((32, 32), (15.0, 15.0), 5.0)
        interpolate_slices(m, Axis.TRANSVERSE, [3, 7])
        assert np.array_equal(m.bits[:, :, 0], sentinel)
        assert not m.bits[:, :, 9].any()

    def test_nested_discs_monotone(self):
        m = self.make_mask()
        m.bits[:, :, 0] = disc_mask((32, 32), (15.0, 15.0), 3.0)
        m.bits[:, :, 10] = disc_mask((32, 32), (15.0, 15.0), 10.0)
        interpolate_slices(m, Axis.TRANSVERSE, [0, 10])
        for k in range(10):
            a = m.bits[:, :, k]
            b = m.bits[:, :, k + 1]
            assert np.all(b[a]), f"slice {k} not nested in {k + 1}"

    def test_symmetry_forward_backward(self):
        rng = np.random.default_rng(3)
        a = disc_mask((32, 32), (13.0, 14.0), 5.0)
        b = disc_mask((32, 32), (18.0, 17.0), 7.5)
        m1 = self.make_mask(11)
        m1.bits[:, :, 0] = a
        m1.bits[:, :, 10] = b
        interpolate_slices(m1, Axis.TRANSVERSE, [0, 10])
        m2 = self.make_mask(11)
        m2.bits[:, :, 0] = b
        m2.bits[:, :, 10] = a
        interpolate_slices(m2, Axis.TRANSVERSE, [0, 10])
        for k in range(11):
            assert np.array_equal(m1.bits[:, :, k], m2.bits[:, :, 10 - k]), k

    def test_empty_key_shrinks_to_extinction(self):
        m = self.make_mask()
        m.bits[:, :, 0] = disc_mask((32, 32), (15.0, 15.0), 7.0)
        interpolate_slices(m, Axis.TRANSVERSE, [0, 10])
        counts = [int(m.bits[:, :, k].sum()) for k in range(11)]
        assert counts[10] == 0
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        assert counts[1] > 0  # gradual, not instant extinction

    def test_other_axis(self):
        m = LabelVolume((9, 16, 16))
        m.bits[0, :, :] = disc_mask((16, 16), (7.0, 7.0), 5.0)
        m.bits[8, :, :] = disc_mask((16, 16), (7.0, 7.0), 5.0)
        interpolate_slices(m, Axis.SAGITTAL, [0, 8])
        assert np.array_equal(m.bits[4, :, :], m.bits[0, :, :])
