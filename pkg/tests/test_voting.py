import math

import numpy as np
import pytest

from curbmap import (EmptyInputError, PointCloud, VotingParams, ZeroDistanceError,
                     ball_vote, build_index, decay, decompose, decompose_batch,
                     encode, saliencies, saliency_field, sparse_vote)
from curbmap.scene import _sample_grid
from curbmap.voting import CUTOFF_SIGMAS

from oracles import (ball_vote_quadrature, double_loop_vote, frobenius,
                     random_rotation)

E_INV = 0.36787944117144233  # exp(-1)
E_4 = 0.01831563888873418    # exp(-4)


def cloud_of(points):
    return PointCloud(np.asarray(points, dtype=float))


class TestDecay:
    def test_zero_distance_is_one(self):
        assert decay(0.0, 1.0) == 1.0

    def test_at_sigma(self):
        assert abs(decay(1.0, 1.0) - E_INV) < 1e-12
        assert abs(decay(0.3, 0.3) - E_INV) < 1e-12

    def test_two_sigma_squared(self):
        assert abs(decay(2.0, 1.0) - E_4) < 1e-12

    def test_strictly_decreasing(self):
        sweep = decay(np.linspace(0.0, 5.0, 1000), 0.7)
        assert (np.diff(sweep) < 0).all()

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            decay(1.0, 0.0)


class TestVotingParams:
    def test_default_cutoff(self):
        params = VotingParams(sigma=0.3)
        assert abs(params.cutoff - 0.3 * math.sqrt(math.log(1000.0))) < 1e-15
        assert abs(CUTOFF_SIGMAS - 2.6282608848784663) < 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            VotingParams(sigma=-1.0)
        with pytest.raises(ValueError):
            VotingParams(sigma=1.0, cutoff=0.0)


class TestEncode:
    def test_single_point_identity(self):
        t6 = encode(cloud_of([[1, 2, 3]]))
        assert np.array_equal(t6, [[1, 0, 0, 1, 0, 1]])

    def test_all_identity_eigenvalues(self, rng):
        t6 = encode(cloud_of(rng.normal(size=(50, 3))))
        lam, _ = decompose_batch(t6)
        assert np.allclose(lam, 1.0, atol=1e-12)
        stick, plate, ball = saliencies(lam)
        assert np.allclose(stick, 0, atol=1e-12)
        assert np.allclose(plate, 0, atol=1e-12)
        assert np.allclose(ball, 1, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            encode(cloud_of(np.zeros((0, 3))))


class TestBallVote:
    def test_unit_offset_closed_form(self):
        vote = ball_vote((1, 0, 0), (0, 0, 0), 1.0)
        assert np.allclose(vote, E_INV * np.diag([0.0, 1.0, 1.0]), atol=1e-12)

    def test_null_direction_along_offset(self, rng):
        for _ in range(25):
            receiver = rng.normal(size=3)
            voter = rng.normal(size=3)
            vote = ball_vote(receiver, voter, 0.8)
            lam, vecs = np.linalg.eigh(vote)
            null_dir = vecs[:, 0]
            radial = (receiver - voter) / np.linalg.norm(receiver - voter)
            assert abs(abs(null_dir @ radial) - 1.0) < 1e-9
            assert abs(lam[0]) < 1e-12
            assert abs(lam[1] - lam[2]) < 1e-12

    def test_coincident_points_rejected(self):
        with pytest.raises(ZeroDistanceError):
            ball_vote((1, 1, 1), (1, 1, 1), 0.5)

    def test_quadrature_oracle_proportional(self, rng):
        for _ in range(5):
            receiver = rng.normal(size=3)
            voter = receiver + rng.normal(size=3) * 0.4
            closed = ball_vote(receiver, voter, 0.5)
            integral = ball_vote_quadrature(receiver, voter, 0.5)
            diff = closed / frobenius(closed) - integral / frobenius(integral)
            assert frobenius(diff) < 0.02


class TestSparseVote:
    def test_isolated_point_keeps_encoding(self):
        cloud = cloud_of([[5, 5, 5]])
        index = build_index(cloud, 1.0)
        t6 = sparse_vote(cloud, index, VotingParams(sigma=1.0))
        assert np.array_equal(t6, [[1, 0, 0, 1, 0, 1]])

    def test_isolated_point_without_self(self):
        cloud = cloud_of([[5, 5, 5]])
        t6 = sparse_vote(cloud, None, VotingParams(sigma=1.0, include_self=False))
        assert np.array_equal(t6, np.zeros((1, 6)))

    def test_two_points_single_vote_algebra(self):
        cloud = cloud_of([[0, 0, 0], [1, 0, 0]])
        params = VotingParams(sigma=1.0, cutoff=2.0, include_self=False)
        t6 = sparse_vote(cloud, build_index(cloud, 2.0), params)
        lam, _ = decompose_batch(t6)
        stick, plate, ball = saliencies(lam)
        for k in range(2):
            assert np.allclose(np.sort(lam[k]), [0.0, E_INV, E_INV], atol=1e-12)
            assert abs(stick[k]) < 1e-12
            assert abs(plate[k] - E_INV) < 1e-12
            assert abs(ball[k]) < 1e-12

    def test_exact_duplicate_points_contribute_nothing(self):
        cloud = cloud_of([[1, 1, 1], [1, 1, 1], [2, 2, 2]])
        t6 = sparse_vote(cloud, build_index(cloud, 5.0), VotingParams(sigma=5.0))
        assert np.array_equal(t6[0], t6[1])

    def test_empty_cloud_rejected(self):
        with pytest.raises(EmptyInputError):
            sparse_vote(cloud_of(np.zeros((0, 3))), None, VotingParams())

    def test_double_loop_oracle_exact(self, rng):
        points = rng.uniform(0, 3, size=(400, 3))
        cloud = cloud_of(points)
        params = VotingParams(sigma=0.4)
        expected = double_loop_vote(points, params.sigma, params.cutoff)
        via_grid = sparse_vote(cloud, build_index(cloud, params.cutoff), params)
        via_brute = sparse_vote(cloud, None, params)
        assert np.array_equal(via_grid, expected)
        assert np.array_equal(via_brute, expected)

    def test_thread_count_does_not_change_bytes(self, rng):
        points = rng.uniform(0, 4, size=(3000, 3))
        cloud = cloud_of(points)
        params = VotingParams(sigma=0.35)
        index = build_index(cloud, params.cutoff)
        base = sparse_vote(cloud, index, params, threads=1)
        for threads in (2, 4, 7):
            assert np.array_equal(base, sparse_vote(cloud, index, params, threads=threads))

    def test_accumulated_tensors_are_psd(self, rng):
        points = rng.uniform(0, 2, size=(300, 3))
        cloud = cloud_of(points)
        t6 = sparse_vote(cloud, None, VotingParams(sigma=0.5, include_self=False))
        lam, _ = decompose_batch(t6)
        assert lam.min() > -1e-9


def plane_patch(rng, half=1.5, density=450.0, noise=0.01):
    xy = _sample_grid(rng, -half, half, -half, half, density, jitter=0.1)
    points = np.column_stack([xy, np.zeros(len(xy))])
    return points + rng.normal(0, noise, points.shape)


class TestSaliencyField:
    def test_plane_recovery(self, rng):
        # plane points: strong stick, negligible plate, vertical normals.
        # ball stays comparable to stick under sparse ball voting (each
        # vote carries a full unit of isotropic mass), which is why the
        # ground filter thresholds the stick channel instead of asking
        # stick to beat ball.
        points = plane_patch(rng)
        field = saliency_field(cloud_of(points), VotingParams(sigma=0.4))
        interior = np.abs(points[:, :2]).max(axis=1) < 0.9
        stick = field.channel("stick")[interior]
        plate = field.channel("plate")[interior]
        nz = np.abs(field.channel("nz")[interior])
        good = (stick > plate) & (nz > np.cos(np.radians(5.0)))
        assert good.mean() >= 0.95
        assert (stick >= 0.5 * field.channel("stick").max()).mean() >= 0.95
        zsal = field.channel("zsal")[interior]
        assert np.allclose(zsal, nz * stick, atol=1e-12)

    def test_vertical_wall_normals(self, rng):
        yz = _sample_grid(rng, -1.5, 1.5, -1.5, 1.5, 450.0, jitter=0.1)
        points = np.column_stack([np.zeros(len(yz)), yz[:, 0], yz[:, 1]])
        points += rng.normal(0, 0.01, points.shape)
        field = saliency_field(cloud_of(points), VotingParams(sigma=0.4))
        interior = np.abs(points[:, 1:]).max(axis=1) < 0.9
        nx = np.abs(field.channel("nx")[interior])
        assert (nx > np.cos(np.radians(5.0))).mean() >= 0.95
        zsal = field.channel("zsal")[interior]
        stick = field.channel("stick")[interior]
        assert zsal.mean() < 0.05 * stick.mean()

    def test_step_junction_plate_stands_out(self, rng):
        # right-angle step: the junction carries the line feature
        low_xy = _sample_grid(rng, -2.0, 0.0, -2.0, 2.0, 500.0, jitter=0.1)
        high_xy = _sample_grid(rng, 0.0, 2.0, -2.0, 2.0, 500.0, jitter=0.1)
        face_yz = _sample_grid(rng, -2.0, 2.0, 0.0, 0.15, 500.0, jitter=0.1)
        points = np.concatenate([
            np.column_stack([low_xy, np.zeros(len(low_xy))]),
            np.column_stack([high_xy, np.full(len(high_xy), 0.15)]),
            np.column_stack([np.zeros(len(face_yz)), face_yz[:, 0], face_yz[:, 1]]),
        ])
        points += rng.normal(0, 0.004, points.shape)
        field = saliency_field(cloud_of(points), VotingParams(sigma=0.3))
        plate = field.channel("plate")
        near_junction = np.abs(points[:, 0]) <= 0.1
        interior = ((np.abs(points[:, 0]) > 0.75) & (np.abs(points[:, 0]) < 1.5)
                    & (np.abs(points[:, 1]) < 1.5))
        p90 = np.percentile(plate[interior], 90)
        assert (plate[near_junction] > p90).mean() >= 0.9

    def test_rotation_equivariance(self, rng):
        points = plane_patch(rng, half=1.0, density=350.0)
        params = VotingParams(sigma=0.35)
        rot = random_rotation(rng)
        base = saliency_field(cloud_of(points), params)
        turned = saliency_field(cloud_of(points @ rot.T), params)
        for name in ("stick", "plate", "ball"):
            assert np.abs(base.channel(name) - turned.channel(name)).max() < 1e-9
        normals = np.column_stack([base.channel(c) for c in ("nx", "ny", "nz")])
        normals_rot = np.column_stack([turned.channel(c) for c in ("nx", "ny", "nz")])
        alignment = np.abs(np.einsum("ni,ni->n", normals @ rot.T, normals_rot))
        assert (alignment > 1.0 - 1e-6).all()

    def test_translation_invariance(self, rng):
        points = plane_patch(rng, half=1.0, density=350.0)
        params = VotingParams(sigma=0.35)
        base = saliency_field(cloud_of(points), params)
        moved = saliency_field(cloud_of(points + np.array([10.5, -7.25, 3.125])), params)
        for name in ("stick", "plate", "ball", "nx", "ny", "nz", "zsal"):
            assert np.abs(base.channel(name) - moved.channel(name)).max() < 1e-9

    def test_truncation_error_bound(self, rng):
        # the default cutoff loses under 0.2% of each accumulated tensor
        points = rng.uniform(0, 1, size=(1200, 3))
        cloud = cloud_of(points)
        sigma = 0.5
        truncated = sparse_vote(cloud, None, VotingParams(sigma=sigma))
        full = sparse_vote(cloud, None, VotingParams(sigma=sigma, cutoff=10.0))
        weight = np.array([1, 2, 2, 1, 2, 1], dtype=float)  # six-component Frobenius
        diff = np.sqrt(((truncated - full) ** 2 * weight).sum(axis=1))
        norm = np.sqrt((full ** 2 * weight).sum(axis=1))
        assert (diff / norm).max() < 0.002

    def test_empty_cloud_rejected(self):
        with pytest.raises(EmptyInputError):
            saliency_field(cloud_of(np.zeros((0, 3))), VotingParams())


class TestDecomposeApi:
    def test_accepts_matrix_and_components(self):
        mat = np.diag([2.0, 1.0, 0.5])
        from_mat = decompose(mat)
        from_parts = decompose(np.array([2.0, 0, 0, 1.0, 0, 0.5]))
        assert np.array_equal(from_mat.eigenvalues, from_parts.eigenvalues)

    def test_saliency_record_directions(self):
        from curbmap import saliency_record

        dec = decompose(np.diag([3.0, 2.0, 1.0]))
        rec = saliency_record(dec)
        assert np.allclose([rec.stick, rec.plate, rec.ball], 1.0, atol=1e-12)
        assert np.allclose(np.abs(rec.normal), [1, 0, 0], atol=1e-12)
        assert np.allclose(np.abs(rec.tangent), [0, 0, 1], atol=1e-12)
        gram = dec.eigenvectors @ dec.eigenvectors.T
        assert np.allclose(gram, np.eye(3), atol=1e-12)
