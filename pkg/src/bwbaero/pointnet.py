"""Permutation-invariant point-cloud regressor for the planform parameters.

A shared per-point MLP (3 -> 64 -> 128) lifts each surface point to a
feature vector; columnwise max-pooling collapses the cloud into a single
128-wide latent; a small head (128 -> 64 -> 9) regresses the nine planform
parameters. Max-pooling makes the prediction exactly invariant to point
order and to duplicated points. Targets are normalized to [0, 1] by the
parameter sampling bounds before the MSE loss.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .dataio import CaseRecord, DatasetSplit
from .errors import DomainError, ShapeError, TrainingError
from .geometry import PARAM_BOUNDS, PlanformParams, SurfaceCloud
from .nncore import (
    Mlp,
    adam_init,
    adam_step,
    flatten_grads,
    init_mlp,
    load_checkpoint,
    max_pool_batched,
    max_pool_batched_backward,
    max_pool_over_rows,
    mlp_arrays,
    mlp_from_arrays,
    mlp_spec,
    mse_loss,
    save_checkpoint,
)

PARAM_DIM = 9
POINT_DIM = 3
LATENT_DIM = 128
SUBSAMPLE_POINTS = 2048
SUBSAMPLE_BATCHES = 15

PHI_WIDTHS = [POINT_DIM, 64, LATENT_DIM]
PHI_ACTIVATIONS = ["relu", "relu"]
HEAD_WIDTHS = [LATENT_DIM, 64, PARAM_DIM]
HEAD_ACTIVATIONS = ["relu", "identity"]


def default_bounds() -> np.ndarray:
    return np.array(list(PARAM_BOUNDS.values()), dtype=float)


def normalize_params(values, bounds) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return (values - lo) / (hi - lo)


def denormalize_params(unit, bounds) -> np.ndarray:
    unit = np.asarray(unit, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + unit * (hi - lo)


@dataclass
class SampledBatch:
    """One fixed-size random draw from a surface cloud."""

    points: np.ndarray  # (k, 3)
    geometry_id: str = ""
    batch_index: int = 0
    with_replacement: bool = False


def subsample(cloud: SurfaceCloud, k: int = SUBSAMPLE_POINTS,
              batches: int = SUBSAMPLE_BATCHES, seed: int = 0) -> list[SampledBatch]:
    """Independent uniform draws of k points each; deterministic per seed.

    Clouds smaller than k are sampled with replacement and the batches are
    flagged accordingly.
    """
    n = cloud.n_points
    if n < 1:
        raise DomainError("cannot subsample an empty cloud")
    rng = np.random.default_rng(seed)
    replace = n < k
    out = []
    for b in range(batches):
        idx = rng.choice(n, size=k, replace=replace)
        out.append(SampledBatch(points=cloud.points[idx],
                                geometry_id=cloud.geometry_id,
                                batch_index=b, with_replacement=replace))
    return out


@dataclass
class PointNetModel:
    shared: Mlp
    head: Mlp
    bounds: np.ndarray = field(default_factory=default_bounds)

    @classmethod
    def initialize(cls, seed: int = 0, bounds: np.ndarray | None = None) -> "PointNetModel":
        rng = np.random.default_rng(seed)
        shared = init_mlp(rng, PHI_WIDTHS, PHI_ACTIVATIONS)
        head = init_mlp(rng, HEAD_WIDTHS, HEAD_ACTIVATIONS)
        return cls(shared=shared, head=head,
                   bounds=default_bounds() if bounds is None else np.asarray(bounds, float))

    def parameters(self) -> list[np.ndarray]:
        return self.shared.parameters() + self.head.parameters()

    def save(self, path, manifest_extra: dict | None = None) -> None:
        manifest = {
            "model": "pointnet",
            "shared_spec": mlp_spec(self.shared),
            "head_spec": mlp_spec(self.head),
        }
        if manifest_extra:
            manifest.update(manifest_extra)
        arrays = {"bounds": self.bounds}
        arrays.update(mlp_arrays("shared", self.shared))
        arrays.update(mlp_arrays("head", self.head))
        save_checkpoint(path, manifest, arrays)

    @classmethod
    def load(cls, path) -> tuple["PointNetModel", dict]:
        manifest, arrays = load_checkpoint(path)
        if manifest.get("model") != "pointnet":
            raise DomainError(f"{path}: not a pointnet checkpoint")
        model = cls(shared=mlp_from_arrays("shared", manifest["shared_spec"], arrays),
                    head=mlp_from_arrays("head", manifest["head_spec"], arrays),
                    bounds=arrays["bounds"])
        return model, manifest


def predict_params(model: PointNetModel, batch) -> np.ndarray:
    """Physical 9-vector prediction for one batch (or raw (N, 3) array).

    Exactly permutation-invariant: the per-point MLP treats rows
    independently and the max-pool is order-free. The raw head output is
    denormalized but never clamped to the sampling bounds.
    """
    points = batch.points if isinstance(batch, SampledBatch) else np.asarray(batch, float)
    if points.ndim != 2 or points.shape[1] != POINT_DIM:
        raise ShapeError(f"expected an (N, {POINT_DIM}) point array, got {points.shape}")
    feats = model.shared.forward(points)
    pooled, _ = max_pool_over_rows(feats)
    unit = model.head.forward(pooled[None, :])[0]
    return denormalize_params(unit, model.bounds)


@dataclass
class EnsemblePrediction:
    mean: np.ndarray           # (9,)
    std: np.ndarray            # (9,) spread across the subsampled batches
    predictions: np.ndarray    # (batches, 9)


def predict_params_ensembled(model: PointNetModel, cloud: SurfaceCloud,
                             seed: int = 0, k: int = SUBSAMPLE_POINTS,
                             batches: int = SUBSAMPLE_BATCHES) -> EnsemblePrediction:
    """Mean (and spread) of predict_params over the subsampled batches."""
    preds = np.stack([predict_params(model, b)
                      for b in subsample(cloud, k=k, batches=batches, seed=seed)])
    return EnsemblePrediction(mean=preds.mean(axis=0), std=preds.std(axis=0),
                              predictions=preds)


@dataclass
class PointNetTrainConfig:
    epochs: int = 40
    lr0: float = 1e-3
    decay: float = 0.97
    minibatch: int = 16                       # clouds per Adam step
    k: int = SUBSAMPLE_POINTS
    batches_per_geometry: int = SUBSAMPLE_BATCHES
    seed: int = 0


def _forward_batch(model: PointNetModel, xb: np.ndarray):
    """Cached forward over a (B, k, 3) stack; returns pred and caches."""
    b, k, _ = xb.shape
    flat = xb.reshape(b * k, POINT_DIM)
    feats, shared_cache = model.shared.forward_cached(flat)
    pooled, argmax = max_pool_batched(feats.reshape(b, k, LATENT_DIM))
    pred, head_cache = model.head.forward_cached(pooled)
    return pred, (shared_cache, head_cache, argmax, b, k)


def _backward_batch(model: PointNetModel, dpred: np.ndarray, caches):
    shared_cache, head_cache, argmax, b, k = caches
    dpooled, head_grads = model.head.backward(dpred, head_cache)
    dfeats = max_pool_batched_backward(dpooled, argmax, k).reshape(b * k, LATENT_DIM)
    _, shared_grads = model.shared.backward(dfeats, shared_cache)
    return flatten_grads(shared_grads) + flatten_grads(head_grads)


def _eval_mse(model: PointNetModel, xs: np.ndarray, ys: np.ndarray,
              chunk: int = 32) -> float:
    total = 0.0
    for start in range(0, len(xs), chunk):
        xb = xs[start:start + chunk]
        pred, _ = _forward_batch(model, xb)
        total += float(np.sum((pred - ys[start:start + chunk]) ** 2))
    return total / ys.size


def train_pointnet(corpus: list[CaseRecord], split: DatasetSplit,
                   config: PointNetTrainConfig | None = None):
    """Train on geometry shells; returns (model, log rows).

    ``corpus`` entries need a cloud and params; the geometry-disjoint
    ``split`` decides membership. The model with the best validation MSE
    is returned; log rows are (epoch, train_mse, val_mse, lr).
    """
    config = config or PointNetTrainConfig()
    by_geom = {rec.geometry_id: rec for rec in corpus}
    train_ids = [g for g in split.train_geometries if g in by_geom]
    val_ids = [g for g in split.val_geometries if g in by_geom]
    if not train_ids:
        raise DomainError("split leaves the training set empty for this corpus")

    model = PointNetModel.initialize(seed=config.seed)

    def stack(ids, batches_per_geometry):
        xs, ys = [], []
        for gi, gid in enumerate(ids):
            rec = by_geom[gid]
            target = normalize_params(rec.params.as_array(), model.bounds)
            for batch in subsample(rec.cloud, k=config.k,
                                   batches=batches_per_geometry,
                                   seed=config.seed + 7919 * (gi + 1)):
                xs.append(batch.points)
                ys.append(target)
        return np.stack(xs), np.stack(ys)

    x_train, y_train = stack(train_ids, config.batches_per_geometry)
    if val_ids:
        x_val, y_val = stack(val_ids, config.batches_per_geometry)
    else:  # smoke runs without a holdout: select on the training stack
        x_val, y_val = x_train, y_train

    params = model.parameters()
    state = adam_init(params, lr0=config.lr0, decay=config.decay)
    rng = np.random.default_rng(config.seed + 1)

    log = []
    best = {"val": np.inf, "arrays": None, "epoch": -1}
    for epoch in range(config.epochs):
        order = rng.permutation(len(x_train))
        train_loss_acc = 0.0
        n_batches = 0
        for start in range(0, len(order), config.minibatch):
            idx = order[start:start + config.minibatch]
            pred, caches = _forward_batch(model, x_train[idx])
            loss, dpred = mse_loss(pred, y_train[idx])
            grads = _backward_batch(model, dpred, caches)
            adam_step(params, grads, state)
            train_loss_acc += loss
            n_batches += 1
        val_mse = _eval_mse(model, x_val, y_val)
        if not np.isfinite(val_mse):
            raise TrainingError(f"validation loss diverged at epoch {epoch}",
                                last_good=best["arrays"])
        log.append((epoch, train_loss_acc / max(n_batches, 1), val_mse, state.lr))
        if val_mse < best["val"]:
            best = {"val": val_mse, "arrays": [p.copy() for p in params], "epoch": epoch}
        state.epoch += 1

    for p, saved in zip(params, best["arrays"]):
        p[...] = saved
    return model, {"rows": log, "best_epoch": best["epoch"], "best_val_mse": best["val"]}


def write_training_log(path, log: dict, config_hash: str | None = None) -> None:
    """Delimiter-separated log: epoch, train MSE, val MSE, learning rate."""
    with open(path, "w", encoding="utf-8") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash: {config_hash}\n")
        fh.write(f"# best_epoch: {log['best_epoch']}\n")
        fh.write("epoch,train_mse,val_mse,lr\n")
        for epoch, train_mse, val_mse, lr in log["rows"]:
            fh.write(f"{epoch},{train_mse!r},{val_mse!r},{lr!r}\n")
