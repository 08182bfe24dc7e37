"""FiLM-conditioned field network with a hypernetwork.

The trunk MLP maps a surface sample u = [x, y, z, nx, ny, nz] to the three
pointwise coefficients (Cp, Cfx, Cfz). A smaller hypernetwork maps the
conditioning vector (nine planform parameters plus four flight values,
each normalized by its sampling bounds) to per-layer scale and shift
vectors which modulate the trunk's hidden pre-activations:

    eta_l(h) = gamma_l * h + beta_l,   [gamma_l, beta_l] = hypernet(p, mu)

The scale is parameterized as gamma = 1 + dgamma and the final hypernet
layer starts at zero, so an untrained model applies exact identity
modulation and its output is condition-independent. Targets are
standardized per channel (Cp and the friction components differ by two to
three orders of magnitude); predictions are de-standardized on the way
out. Cfy is not a trunk output: predicted field quads carry zeros there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atmosphere import FLIGHT_BOUNDS, FlightCondition
from .dataio import CaseRecord, DatasetSplit, FieldQuad
from .errors import DomainError, ShapeError, TrainingError
from .forces import IntegratedCoefficients, integrate_case
from .geometry import PlanformParams, SurfaceCloud
from .nncore import (
    Mlp,
    act_backward,
    act_forward,
    adam_init,
    adam_step,
    flatten_grads,
    init_mlp,
    load_checkpoint,
    mlp_arrays,
    mlp_from_arrays,
    mlp_spec,
    mse_loss,
    save_checkpoint,
)
from .pointnet import PointNetModel, default_bounds, normalize_params, predict_params_ensembled

COND_DIM = 13
TRUNK_IN = 6
TRUNK_HIDDEN = [128, 128, 128]
TRUNK_OUT = 3
CHANNELS = ("cp", "cfx", "cfz")

TRUNK_WIDTHS = [TRUNK_IN] + TRUNK_HIDDEN + [TRUNK_OUT]
TRUNK_ACTIVATIONS = ["relu"] * len(TRUNK_HIDDEN) + ["identity"]
HYPER_WIDTHS = [COND_DIM, 128, 2 * sum(TRUNK_HIDDEN)]
HYPER_ACTIVATIONS = ["relu", "identity"]

GROUND_TRUTH_PARAMS = "ground_truth_params"
PREDICTED_PARAMS = "predicted_params"
COND_MODES = (GROUND_TRUTH_PARAMS, PREDICTED_PARAMS)

_UNIT_TOL = 1e-6


def default_flight_bounds() -> np.ndarray:
    return np.array(list(FLIGHT_BOUNDS.values()), dtype=float)


@dataclass
class FilmModel:
    trunk: Mlp
    hypernet: Mlp
    param_bounds: np.ndarray = field(default_factory=default_bounds)
    flight_bounds: np.ndarray = field(default_factory=default_flight_bounds)
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(TRUNK_OUT))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(TRUNK_OUT))

    @classmethod
    def initialize(cls, seed: int = 0) -> "FilmModel":
        rng = np.random.default_rng(seed)
        trunk = init_mlp(rng, TRUNK_WIDTHS, TRUNK_ACTIVATIONS)
        hypernet = init_mlp(rng, HYPER_WIDTHS, HYPER_ACTIVATIONS)
        hypernet.layers[-1].weights[...] = 0.0  # identity modulation at start
        hypernet.layers[-1].biases[...] = 0.0
        return cls(trunk=trunk, hypernet=hypernet)

    @property
    def hidden_widths(self) -> list[int]:
        return [l.n_out for l in self.trunk.layers[:-1]]

    def parameters(self) -> list[np.ndarray]:
        return self.trunk.parameters() + self.hypernet.parameters()

    def save(self, path, manifest_extra: dict | None = None) -> None:
        manifest = {
            "model": "film",
            "trunk_spec": mlp_spec(self.trunk),
            "hyper_spec": mlp_spec(self.hypernet),
        }
        if manifest_extra:
            manifest.update(manifest_extra)
        arrays = {
            "param_bounds": self.param_bounds,
            "flight_bounds": self.flight_bounds,
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }
        arrays.update(mlp_arrays("trunk", self.trunk))
        arrays.update(mlp_arrays("hyper", self.hypernet))
        save_checkpoint(path, manifest, arrays)

    @classmethod
    def load(cls, path) -> tuple["FilmModel", dict]:
        manifest, arrays = load_checkpoint(path)
        if manifest.get("model") != "film":
            raise DomainError(f"{path}: not a film checkpoint")
        model = cls(trunk=mlp_from_arrays("trunk", manifest["trunk_spec"], arrays),
                    hypernet=mlp_from_arrays("hyper", manifest["hyper_spec"], arrays),
                    param_bounds=arrays["param_bounds"],
                    flight_bounds=arrays["flight_bounds"],
                    target_mean=arrays["target_mean"],
                    target_std=arrays["target_std"])
        return model, manifest


def film_modulate(h: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Elementwise gamma * h + beta; widths must agree."""
    h = np.asarray(h, float)
    gamma = np.asarray(gamma, float)
    beta = np.asarray(beta, float)
    if gamma.shape[-1] != h.shape[-1] or beta.shape[-1] != h.shape[-1]:
        raise ShapeError(f"modulation width {gamma.shape[-1]}/{beta.shape[-1]} "
                         f"!= activation width {h.shape[-1]}")
    return gamma * h + beta


def cond_vector(model: FilmModel, params, flight: FlightCondition) -> np.ndarray:
    """Normalized 13-vector: planform parameters followed by flight values."""
    p = params.as_array() if isinstance(params, PlanformParams) else np.asarray(params, float)
    if p.shape != (model.param_bounds.shape[0],):
        raise ShapeError(f"expected {model.param_bounds.shape[0]} parameters, got {p.shape}")
    p_unit = normalize_params(p, model.param_bounds)
    f = np.asarray(flight.as_array(), dtype=float)
    f_unit = (f - model.flight_bounds[:, 0]) / (
        model.flight_bounds[:, 1] - model.flight_bounds[:, 0])
    return np.concatenate([p_unit, f_unit])


def _split_modulation(model: FilmModel, hyper_out: np.ndarray):
    """Hypernet output rows -> per-layer (gamma, beta); gamma = 1 + dgamma."""
    gammas, betas = [], []
    offset = 0
    for w in model.hidden_widths:
        dgamma = hyper_out[..., offset:offset + w]
        beta = hyper_out[..., offset + w:offset + 2 * w]
        gammas.append(1.0 + dgamma)
        betas.append(beta)
        offset += 2 * w
    return gammas, betas


def hypernet_forward(model: FilmModel, cond: np.ndarray):
    """Per-layer (gamma, beta) list for one conditioning vector."""
    cond = np.asarray(cond, float)
    if cond.shape != (COND_DIM,):
        raise ShapeError(f"expected a {COND_DIM}-vector conditioning input, got {cond.shape}")
    out = model.hypernet.forward(cond[None, :])[0]
    gammas, betas = _split_modulation(model, out)
    return list(zip(gammas, betas))


def _trunk_forward(model: FilmModel, x: np.ndarray, gammas, betas, cached: bool = False):
    """Trunk forward with FiLM between each hidden affine and its activation.

    ``gammas``/``betas`` entries may be (w,) rows (shared by all points) or
    (N, w) per-point rows.
    """
    cache = [] if cached else None
    h = x
    for i, layer in enumerate(model.trunk.layers[:-1]):
        pre = layer.affine(h)
        mod = film_modulate(pre, gammas[i], betas[i])
        post = act_forward(layer.activation, mod)
        if cached:
            cache.append((h, pre, mod, post))
        h = post
    out_layer = model.trunk.layers[-1]
    out = out_layer.affine(h)
    if cached:
        cache.append((h, out))
    return (out, cache) if cached else out


def _trunk_backward(model: FilmModel, dout: np.ndarray, cache, gammas):
    """Gradients for trunk parameters plus per-point modulation gradients."""
    out_layer = model.trunk.layers[-1]
    h_last, _ = cache[-1]
    dh, dw_out, db_out = out_layer.affine_backward(dout, h_last)
    trunk_grads = [(dw_out, db_out)]
    dgamma_pts, dbeta_pts = [], []
    for i in range(len(model.trunk.layers) - 2, -1, -1):
        layer = model.trunk.layers[i]
        x_in, pre, mod, post = cache[i]
        dmod = act_backward(layer.activation, mod, post, dh)
        dgamma_pts.append(dmod * pre)
        dbeta_pts.append(dmod)
        dpre = dmod * gammas[i]
        dh, dw, db = layer.affine_backward(dpre, x_in)
        trunk_grads.append((dw, db))
    trunk_grads.reverse()
    dgamma_pts.reverse()
    dbeta_pts.reverse()
    return dh, trunk_grads, dgamma_pts, dbeta_pts


def film_loss_and_grads(model: FilmModel, x: np.ndarray, y: np.ndarray,
                        conds: np.ndarray, case_of_row: np.ndarray):
    """Joint MSE loss and gradients for a minibatch of points from C cases.

    ``conds`` is (C, 13); ``case_of_row`` maps each of the N points to its
    case row. Returns (loss, flat gradients aligned with model.parameters()).
    """
    hyper_out, hyper_cache = model.hypernet.forward_cached(conds)
    gammas_c, betas_c = _split_modulation(model, hyper_out)
    gammas = [g[case_of_row] for g in gammas_c]
    betas = [b[case_of_row] for b in betas_c]

    out, cache = _trunk_forward(model, x, gammas, betas, cached=True)
    loss, dout = mse_loss(out, y)
    _, trunk_grads, dgamma_pts, dbeta_pts = _trunk_backward(model, dout, cache, gammas)

    n_cases = conds.shape[0]
    dhyper = np.zeros((n_cases, hyper_out.shape[1]))
    offset = 0
    for i, w in enumerate(model.hidden_widths):
        np.add.at(dhyper[:, offset:offset + w], case_of_row, dgamma_pts[i])
        np.add.at(dhyper[:, offset + w:offset + 2 * w], case_of_row, dbeta_pts[i])
        offset += 2 * w
    _, hyper_grads = model.hypernet.backward(dhyper, hyper_cache)
    return loss, flatten_grads(trunk_grads) + flatten_grads(hyper_grads)


def _film_loss_and_grads_grouped(model: FilmModel, x: np.ndarray, y: np.ndarray,
                                 conds: np.ndarray, points_per_case: int):
    """Fast path: rows grouped contiguously, points_per_case rows per case."""
    n_cases = conds.shape[0]
    hyper_out, hyper_cache = model.hypernet.forward_cached(conds)
    gammas_c, betas_c = _split_modulation(model, hyper_out)
    expand = lambda a: np.repeat(a, points_per_case, axis=0)
    gammas = [expand(g) for g in gammas_c]
    betas = [expand(b) for b in betas_c]

    out, cache = _trunk_forward(model, x, gammas, betas, cached=True)
    loss, dout = mse_loss(out, y)
    _, trunk_grads, dgamma_pts, dbeta_pts = _trunk_backward(model, dout, cache, gammas)

    dhyper = np.zeros((n_cases, hyper_out.shape[1]))
    offset = 0
    for i, w in enumerate(model.hidden_widths):
        dhyper[:, offset:offset + w] = dgamma_pts[i].reshape(
            n_cases, points_per_case, w).sum(axis=1)
        dhyper[:, offset + w:offset + 2 * w] = dbeta_pts[i].reshape(
            n_cases, points_per_case, w).sum(axis=1)
        offset += 2 * w
    _, hyper_grads = model.hypernet.backward(dhyper, hyper_cache)
    return loss, flatten_grads(trunk_grads) + flatten_grads(hyper_grads)


# ---------------------------------------------------------------------------
# inference

def _check_normals(normals: np.ndarray) -> None:
    norms = np.linalg.norm(np.atleast_2d(normals), axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise DomainError("surface normal must be unit length within 1e-6")


def predict_standardized(model: FilmModel, x: np.ndarray, cond: np.ndarray) -> np.ndarray:
    """(N, 3) standardized trunk outputs for one conditioning vector."""
    gb = hypernet_forward(model, cond)
    gammas = [g for g, _ in gb]
    betas = [b for _, b in gb]
    return _trunk_forward(model, x, gammas, betas)


def predict_point(model: FilmModel, x, n, cond) -> tuple[float, float, float]:
    """Physical (cp, cfx, cfz) at one surface sample."""
    x = np.asarray(x, float)
    n = np.asarray(n, float)
    if x.shape != (3,) or n.shape != (3,):
        raise ShapeError("predict_point expects 3-vectors for position and normal")
    _check_normals(n)
    std_out = predict_standardized(model, np.concatenate([x, n])[None, :], cond)[0]
    phys = model.target_mean + model.target_std * std_out
    return float(phys[0]), float(phys[1]), float(phys[2])


def predict_fields(model: FilmModel, cloud: SurfaceCloud, cond) -> FieldQuad:
    """Pointwise fields over a whole cloud; Cfy is not predicted (zeros)."""
    _check_normals(cloud.normals)
    x = np.hstack([cloud.points, cloud.normals])
    std_out = predict_standardized(model, x, cond)
    phys = model.target_mean + model.target_std * std_out
    return FieldQuad(cp=phys[:, 0], cfx=phys[:, 1],
                     cfy=np.zeros(cloud.n_points), cfz=phys[:, 2])


@dataclass
class PredictionResult:
    """End-to-end pipeline output for one case."""

    fields: FieldQuad
    integrated: IntegratedCoefficients
    params_used: np.ndarray
    cond_mode: str
    cfy_predicted: bool = False  # the trunk only predicts (Cp, Cfx, Cfz)


def predict_case(pointnet: PointNetModel | None, film: FilmModel,
                 cloud: SurfaceCloud, flight: FlightCondition,
                 params: PlanformParams | None = None,
                 cond_mode: str = PREDICTED_PARAMS, seed: int = 0) -> PredictionResult:
    """Full surrogate pipeline: conditioning, pointwise fields, integration."""
    if cond_mode not in COND_MODES:
        raise DomainError(f"unknown conditioning mode {cond_mode!r}")
    if cond_mode == GROUND_TRUTH_PARAMS:
        if params is None:
            raise DomainError("ground-truth conditioning requires planform parameters")
        p_used = params.as_array()
    else:
        if pointnet is None:
            raise DomainError("predicted conditioning requires a PointNet model")
        p_used = predict_params_ensembled(pointnet, cloud, seed=seed).mean
    cond = cond_vector(film, p_used, flight)
    fields = predict_fields(film, cloud, cond)
    integrated = integrate_case(cloud, fields, flight.alpha)
    return PredictionResult(fields=fields, integrated=integrated,
                            params_used=p_used, cond_mode=cond_mode)


# ---------------------------------------------------------------------------
# training

@dataclass
class FilmTrainConfig:
    epochs: int = 120
    lr0: float = 2e-3
    decay: float = 0.98
    cases_per_step: int = 32
    points_per_case_step: int = 128
    val_points_per_case: int = 256
    seed: int = 0
    cond_seed: int = 0  # subsampling seed for predicted-params conditioning


def _case_conditions(model: FilmModel, cases: list[CaseRecord], cond_mode: str,
                     pointnet: PointNetModel | None, cond_seed: int) -> np.ndarray:
    if cond_mode == PREDICTED_PARAMS and pointnet is None:
        raise DomainError("predicted_params conditioning requires a trained PointNet")
    predicted: dict[str, np.ndarray] = {}
    conds = np.empty((len(cases), COND_DIM))
    for i, rec in enumerate(cases):
        if cond_mode == GROUND_TRUTH_PARAMS:
            p = rec.params.as_array()
        else:
            if rec.geometry_id not in predicted:
                predicted[rec.geometry_id] = predict_params_ensembled(
                    pointnet, rec.cloud, seed=cond_seed).mean
            p = predicted[rec.geometry_id]
        conds[i] = cond_vector(model, p, rec.flight)
    return conds


def train_film(corpus: list[CaseRecord], split: DatasetSplit,
               cond_mode: str = GROUND_TRUTH_PARAMS,
               pointnet: PointNetModel | None = None,
               config: FilmTrainConfig | None = None):
    """Jointly optimize trunk and hypernet on pointwise MSE.

    Minibatches mix points from ``cases_per_step`` cases, a fresh random
    subset of points per visit. Targets are standardized per channel over
    the training points. Returns the best-validation model and a log dict.
    """
    if cond_mode not in COND_MODES:
        raise DomainError(f"unknown conditioning mode {cond_mode!r}")
    config = config or FilmTrainConfig()
    by_case = {rec.case_id: rec for rec in corpus}
    train_cases = [by_case[c] for c in split.train if c in by_case]
    val_cases = [by_case[c] for c in split.val if c in by_case]
    if not train_cases:
        raise DomainError("split leaves the training set empty for this corpus")
    if not val_cases:  # smoke runs without a holdout: select on training cases
        val_cases = train_cases

    model = FilmModel.initialize(seed=config.seed)

    def stack_xy(rec: CaseRecord):
        x = np.hstack([rec.cloud.points, rec.cloud.normals])
        y = np.column_stack([rec.fields.cp, rec.fields.cfx, rec.fields.cfz])
        return x, y

    xs, ys, offsets, counts = [], [], [], []
    total = 0
    for rec in train_cases:
        x, y = stack_xy(rec)
        xs.append(x)
        ys.append(y)
        offsets.append(total)
        counts.append(len(x))
        total += len(x)
    x_train = np.vstack(xs)
    y_train_raw = np.vstack(ys)
    offsets = np.array(offsets)
    counts = np.array(counts)

    model.target_mean = y_train_raw.mean(axis=0)
    std = y_train_raw.std(axis=0)
    model.target_std = np.where(std > 1e-12, std, 1.0)
    y_train = (y_train_raw - model.target_mean) / model.target_std

    conds_train = _case_conditions(model, train_cases, cond_mode, pointnet, config.cond_seed)
    conds_val = _case_conditions(model, val_cases, cond_mode, pointnet, config.cond_seed)

    # Fixed validation subset: a deterministic draw per case.
    val_rng = np.random.default_rng(config.seed + 101)
    val_x, val_y, val_case = [], [], []
    for ci, rec in enumerate(val_cases):
        x, y = stack_xy(rec)
        take = min(config.val_points_per_case, len(x))
        idx = val_rng.choice(len(x), size=take, replace=False)
        val_x.append(x[idx])
        val_y.append((y[idx] - model.target_mean) / model.target_std)
        val_case.append(np.full(take, ci))
    val_x = np.vstack(val_x)
    val_y = np.vstack(val_y)
    val_case = np.concatenate(val_case)

    def val_mse() -> float:
        hyper_out = model.hypernet.forward(conds_val)
        gammas_c, betas_c = _split_modulation(model, hyper_out)
        gammas = [g[val_case] for g in gammas_c]
        betas = [b[val_case] for b in betas_c]
        out = _trunk_forward(model, val_x, gammas, betas)
        return float(np.mean((out - val_y) ** 2))

    params = model.parameters()
    state = adam_init(params, lr0=config.lr0, decay=config.decay)
    rng = np.random.default_rng(config.seed + 2)
    n_cases = len(train_cases)
    ppc = config.points_per_case_step

    log = []
    best = {"val": np.inf, "arrays": None, "epoch": -1}
    for epoch in range(config.epochs):
        case_order = rng.permutation(n_cases)
        train_loss_acc = 0.0
        n_steps = 0
        for start in range(0, n_cases, config.cases_per_step):
            case_ids = case_order[start:start + config.cases_per_step]
            picks = (rng.random((len(case_ids), ppc))
                     * counts[case_ids][:, None]).astype(np.int64)
            rows = (offsets[case_ids][:, None] + picks).reshape(-1)
            loss, grads = _film_loss_and_grads_grouped(
                model, x_train[rows], y_train[rows], conds_train[case_ids], ppc)
            adam_step(params, grads, state)
            train_loss_acc += loss
            n_steps += 1
        vm = val_mse()
        if not np.isfinite(vm):
            raise TrainingError(f"validation loss diverged at epoch {epoch}",
                                last_good=best["arrays"])
        log.append((epoch, train_loss_acc / max(n_steps, 1), vm, state.lr))
        if vm < best["val"]:
            best = {"val": vm, "arrays": [p.copy() for p in params], "epoch": epoch}
        state.epoch += 1

    for p, saved in zip(params, best["arrays"]):
        p[...] = saved
    return model, {"rows": log, "best_epoch": best["epoch"], "best_val_mse": best["val"]}
