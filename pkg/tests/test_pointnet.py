import numpy as np
import pytest

from bwbaero.dataio import CaseRecord, DatasetSplit
from bwbaero.errors import DomainError, ShapeError
from bwbaero.geometry import PlanformParams, SurfaceCloud, sample_surface
from bwbaero.nncore import mse_loss
from bwbaero.pointnet import (
    PointNetModel,
    PointNetTrainConfig,
    _backward_batch,
    _forward_batch,
    default_bounds,
    denormalize_params,
    normalize_params,
    predict_params,
    predict_params_ensembled,
    subsample,
    train_pointnet,
    write_training_log,
)
from bwbaero.sampling import sample_planforms


def tiny_cloud(n=64, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 3))
    normals = np.tile([0.0, 0.0, 1.0], (n, 1))
    return SurfaceCloud(points=pts, normals=normals, areas=np.ones(n), geometry_id="t")


class TestSubsample:
    def test_exact_size_without_replacement_is_whole_cloud(self):
        cloud = tiny_cloud(n=32)
        batches = subsample(cloud, k=32, batches=2, seed=0)
        for b in batches:
            assert not b.with_replacement
            assert sorted(map(tuple, b.points)) == sorted(map(tuple, cloud.points))

    def test_deterministic_per_seed(self):
        cloud = tiny_cloud(n=100)
        a = subsample(cloud, k=16, batches=3, seed=5)
        b = subsample(cloud, k=16, batches=3, seed=5)
        c = subsample(cloud, k=16, batches=3, seed=6)
        for x, y in zip(a, b):
            assert np.array_equal(x.points, y.points)
        assert not all(np.array_equal(x.points, y.points) for x, y in zip(a, c))

    def test_batches_are_subsets_of_cloud(self, midpoint_cloud):
        point_set = set(map(tuple, midpoint_cloud.points))
        for b in subsample(midpoint_cloud, k=2048, batches=15, seed=1):
            assert b.points.shape == (2048, 3)
            assert set(map(tuple, b.points)) <= point_set

    def test_small_cloud_flagged_replacement(self):
        cloud = tiny_cloud(n=8)
        batches = subsample(cloud, k=16, batches=2, seed=0)
        assert all(b.with_replacement for b in batches)
        assert batches[0].points.shape == (16, 3)

    def test_empty_cloud(self):
        cloud = SurfaceCloud(points=np.zeros((0, 3)), normals=np.zeros((0, 3)),
                             areas=np.zeros(0))
        with pytest.raises(DomainError):
            subsample(cloud, k=4, batches=1)


class TestNormalization:
    def test_round_trip(self):
        bounds = default_bounds()
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = np.array([rng.uniform(lo, hi) for lo, hi in bounds])
            back = denormalize_params(normalize_params(p, bounds), bounds)
            assert np.allclose(back, p, rtol=1e-12, atol=1e-15)

    def test_bounds_map_to_unit_interval(self):
        bounds = default_bounds()
        assert np.allclose(normalize_params(bounds[:, 0], bounds), 0.0)
        assert np.allclose(normalize_params(bounds[:, 1], bounds), 1.0)


class TestPredict:
    def test_permutation_invariance_bitwise(self):
        model = PointNetModel.initialize(seed=1)
        rng = np.random.default_rng(2)
        points = rng.standard_normal((256, 3))
        base = predict_params(model, points)
        for _ in range(50):
            perm = rng.permutation(len(points))
            assert np.array_equal(predict_params(model, points[perm]), base)

    def test_duplicate_row_invariance_bitwise(self):
        model = PointNetModel.initialize(seed=1)
        rng = np.random.default_rng(3)
        points = rng.standard_normal((128, 3))
        base = predict_params(model, points)
        extended = np.vstack([points, points[17:18]])
        assert np.array_equal(predict_params(model, extended), base)

    def test_shape_check(self):
        model = PointNetModel.initialize(seed=0)
        with pytest.raises(ShapeError):
            predict_params(model, np.zeros((10, 2)))

    def test_ensemble_of_identical_batches_equals_single(self):
        # With k = cloud size and no replacement every batch is a permutation
        # of the same points, so each prediction is bitwise identical.
        model = PointNetModel.initialize(seed=4)
        cloud = tiny_cloud(n=32, seed=5)
        ens = predict_params_ensembled(model, cloud, seed=0, k=32, batches=5)
        single = predict_params(model, cloud.points)
        assert np.array_equal(ens.mean, single)
        assert np.array_equal(ens.std, np.zeros(9))
        assert ens.predictions.shape == (5, 9)


class TestGradients:
    def test_full_model_finite_difference(self):
        model = PointNetModel.initialize(seed=7)
        rng = np.random.default_rng(8)
        xb = rng.standard_normal((2, 32, 3))
        yb = rng.uniform(0.0, 1.0, (2, 9))

        def loss():
            pred, _ = _forward_batch(model, xb)
            return mse_loss(pred, yb)[0]

        pred, caches = _forward_batch(model, xb)
        base_loss, dpred = mse_loss(pred, yb)
        grads = _backward_batch(model, dpred, caches)
        params = model.parameters()
        h = 1e-5
        checked = 0
        for arr, grad in zip(params, grads):
            flat_idx = rng.choice(arr.size, size=min(4, arr.size), replace=False)
            for fi in flat_idx:
                idx = np.unravel_index(fi, arr.shape)
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss()
                arr[idx] = orig - h
                down = loss()
                arr[idx] = orig
                numeric = (up - down) / (2 * h)
                assert grad[idx] == pytest.approx(numeric, rel=1e-5, abs=1e-10)
                checked += 1
        assert checked >= 20


class TestTraining:
    def corpus(self, n_geoms, n_chord=12, n_span=6, seed=0):
        recs = []
        for i, p in enumerate(sample_planforms(n_geoms, seed=seed)):
            gid = f"g{i:03d}"
            cloud = sample_surface(p, n_chord=n_chord, n_span=n_span,
                                   mirror=True, geometry_id=gid)
            recs.append(CaseRecord(geometry_id=gid, params=p, cloud=cloud, case_id=gid))
        return recs

    def test_single_geometry_smoke_run_writes_checkpoint(self, tmp_path):
        corpus = self.corpus(1)
        split = DatasetSplit(train_geometries=["g000"])
        config = PointNetTrainConfig(epochs=1, k=64, batches_per_geometry=2, minibatch=2)
        model, log = train_pointnet(corpus, split, config)
        path = tmp_path / "pn.ckpt"
        model.save(path, {"epoch": log["best_epoch"]})
        assert path.exists()
        restored, manifest = PointNetModel.load(path)
        pts = corpus[0].cloud.points[:64]
        assert np.array_equal(predict_params(restored, pts), predict_params(model, pts))

    def test_best_val_not_worse_than_first_epoch(self):
        corpus = self.corpus(5)
        split = DatasetSplit(train_geometries=[r.geometry_id for r in corpus[:4]],
                             val_geometries=[corpus[4].geometry_id])
        config = PointNetTrainConfig(epochs=5, k=128, batches_per_geometry=3, minibatch=4)
        _, log = train_pointnet(corpus, split, config)
        val_losses = [row[2] for row in log["rows"]]
        assert min(val_losses) <= val_losses[0]
        assert log["best_val_mse"] == min(val_losses)

    def test_training_is_deterministic(self):
        corpus = self.corpus(3)
        split = DatasetSplit(train_geometries=["g000", "g001"], val_geometries=["g002"])
        config = PointNetTrainConfig(epochs=2, k=64, batches_per_geometry=2, minibatch=2)
        m1, log1 = train_pointnet(corpus, split, config)
        m2, log2 = train_pointnet(corpus, split, config)
        for a, b in zip(m1.parameters(), m2.parameters()):
            assert np.array_equal(a, b)
        assert log1["rows"] == log2["rows"]

    def test_log_file_written(self, tmp_path):
        corpus = self.corpus(2)
        split = DatasetSplit(train_geometries=["g000"], val_geometries=["g001"])
        config = PointNetTrainConfig(epochs=2, k=64, batches_per_geometry=2, minibatch=2)
        _, log = train_pointnet(corpus, split, config)
        path = tmp_path / "train.csv"
        write_training_log(path, log, config_hash="deadbeef")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_hash: deadbeef"
        assert lines[2] == "epoch,train_mse,val_mse,lr"
        assert len(lines) == 3 + 2
