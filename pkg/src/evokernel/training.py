"""Training loops and error reporting for the operator models.

Boundary models minimize the self-supervised integral-equation residual

    (1 / (M N_bd)) sum_i || phi_i / 2 + Ktilde (omega phi_i) - g_i ||^2

built from the same residual operator the classical solver uses, so a loss
value can be recomputed after the fact through bie.bie_residual on the same
batch and matches to the last bit.  Source and baseline models minimize
plain mean squared error against solver labels.

Each optimizer step draws one kappa uniformly and a batch of records for it,
which samples the (kappa, g) product set uniformly over steps while keeping
a single residual operator per step.  All randomness flows from the config
seed; two runs of one config produce bit-identical checkpoints.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import bie
from .nn import Adam, SourceModel, BoundaryModel, BranchTrunk, engine as eg

__all__ = ["TrainConfig", "ErrorReport", "DivergenceError",
           "train_boundary_model", "train_source_model", "train_branch_trunk",
           "boundary_loss", "error_metrics", "evaluate_fields",
           "write_report_csv"]


@dataclass
class TrainConfig:
    epochs: int = 20000
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: float = 0.5       # multiplied in at each quarter of the run
    seed: int = 0
    hidden_k: tuple = (192, 192)
    hidden_g: tuple = (256, 256)
    internal: int | None = None  # boundary-model internal width (default 3 n/4)
    log_every: int = 500

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.lr <= 0:
            raise ValueError("epochs, batch_size and lr must be positive")


class DivergenceError(RuntimeError):
    def __init__(self, step, snapshot):
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step
        self.last_good = snapshot


def _snapshot(params):
    return [p.value.copy() for p in params]


def _lr_schedule(cfg, step):
    quarter = max(cfg.epochs // 4, 1)
    return cfg.lr * (cfg.lr_decay ** (step // quarter))


def _train_loop(model, cfg, step_fn):
    """Shared loop: lr schedule, loss trace, NaN guard with last-good params."""
    params = model.parameters()
    opt = Adam(params, lr=cfg.lr)
    trace = []
    snapshot = _snapshot(params)
    for step in range(cfg.epochs):
        opt.lr = _lr_schedule(cfg, step)
        opt.zero_grad()
        loss = step_fn(step)
        if not np.isfinite(float(loss.value)):
            raise DivergenceError(step, snapshot)
        eg.backward(loss)
        opt.step()
        if step % cfg.log_every == 0 or step == cfg.epochs - 1:
            trace.append((step, float(loss.value)))
        if (step + 1) % max(cfg.epochs // 4, 1) == 0:
            snapshot = _snapshot(params)
    if hasattr(model, "invalidate"):
        model.invalidate()
    return trace


def _boundary_loss_graph(model, B, kappa, g):
    """The self-supervised loss graph; the residual matrix B comes from
    bie.residual_operator, so this is the exact expression bie_residual
    evaluates."""
    kcol = np.full((g.shape[0], 1), kappa)
    phi = model.forward(kcol, g)
    resid = eg.sub_const(eg.matmul_t(phi, B), g)
    return eg.sum_squares(resid, scale=1.0 / (g.shape[0] * g.shape[1]))


def boundary_loss(model, kmat, kappa, g):
    """Loss value for one batch exactly as the trainer computes it."""
    return float(_boundary_loss_graph(model, bie.residual_operator(kmat),
                                      kappa, g).value)


def train_boundary_model(cfg, dataset, kmats, model=None):
    """Train a boundary-density model on the residual loss.

    kmats: one kernel matrix per dataset kappa, in order.  Returns
    (model, info) where info carries the loss trace and provenance.
    """
    if dataset.kind != "boundary-selfsup":
        raise ValueError("boundary training expects a boundary dataset")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0xB7])))
    n_bd = dataset.g.shape[1]
    if model is None:
        model = BoundaryModel.build(
            n_bd if kmats[0].spec.kind == "scalar" else n_bd // 2,
            rng, internal=cfg.internal,
            coupled=kmats[0].spec.kind == "system")
    ops = [bie.residual_operator(km) for km in kmats]
    kappas = dataset.kappas
    groups = [np.nonzero(dataset.kappa_index == ik)[0] for ik in range(len(kappas))]

    def step_fn(step):
        ik = int(rng.integers(0, len(kappas)))
        rows = rng.choice(groups[ik], size=min(cfg.batch_size, groups[ik].size),
                          replace=False)
        return _boundary_loss_graph(model, ops[ik], kappas[ik], dataset.g[rows])

    t0 = time.perf_counter()
    trace = _train_loop(model, cfg, step_fn)
    info = {"loss_trace": trace, "train_seconds": time.perf_counter() - t0,
            "final_loss": trace[-1][1], "data_hash": dataset.content_hash(),
            "seed": cfg.seed, "epochs": cfg.epochs}
    return model, info


def train_source_model(cfg, dataset, points, model=None, coupled=False):
    """Train the product-structure source model with MSE loss."""
    if dataset.kind != "source-supervised":
        raise ValueError("source training expects a supervised dataset")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0x50])))
    if model is None:
        model = SourceModel.build(points, list(cfg.hidden_k), list(cfg.hidden_g),
                                  rng, coupled=coupled)
    kappas = dataset.kappas
    groups = [np.nonzero(dataset.kappa_index == ik)[0] for ik in range(len(kappas))]
    width = dataset.f.shape[1]

    def step_fn(step):
        ik = int(rng.integers(0, len(kappas)))
        rows = rng.choice(groups[ik], size=min(cfg.batch_size, groups[ik].size),
                          replace=False)
        kcol = np.full((rows.size, 1), kappas[ik])
        pred = model.forward(kcol, dataset.f[rows])
        resid = eg.sub_const(pred, dataset.u[rows])
        return eg.sum_squares(resid, scale=1.0 / (rows.size * width))

    t0 = time.perf_counter()
    trace = _train_loop(model, cfg, step_fn)
    info = {"loss_trace": trace, "train_seconds": time.perf_counter() - t0,
            "final_loss": trace[-1][1], "data_hash": dataset.content_hash(),
            "seed": cfg.seed, "epochs": cfg.epochs}
    return model, info


def train_branch_trunk(cfg, dataset, points, width, latent, depth=3, coupled=False):
    """Train the branch-trunk baseline on the same supervised data."""
    if dataset.kind != "source-supervised":
        raise ValueError("baseline training expects a supervised dataset")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0xD1])))
    model = BranchTrunk.build(points, width, latent, depth, rng, coupled=coupled)
    kappas = dataset.kappas
    groups = [np.nonzero(dataset.kappa_index == ik)[0] for ik in range(len(kappas))]
    out_width = dataset.u.shape[1]

    def step_fn(step):
        ik = int(rng.integers(0, len(kappas)))
        rows = rng.choice(groups[ik], size=min(cfg.batch_size, groups[ik].size),
                          replace=False)
        binput = np.column_stack([np.full(rows.size, kappas[ik]), dataset.f[rows]])
        pred = model.forward(binput)
        resid = eg.sub_const(pred, dataset.u[rows])
        return eg.sum_squares(resid, scale=1.0 / (rows.size * out_width))

    t0 = time.perf_counter()
    trace = _train_loop(model, cfg, step_fn)
    info = {"loss_trace": trace, "train_seconds": time.perf_counter() - t0,
            "final_loss": trace[-1][1], "data_hash": dataset.content_hash(),
            "seed": cfg.seed, "epochs": cfg.epochs}
    return model, info


def error_metrics(pred, ref):
    """The four table metrics: absolute/relative L2 and max norms.

    L2 here is the discrete root-mean-square over the evaluation points,
    relative errors divide by the matching norm of the reference.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    diff = pred - ref
    abs_l2 = float(np.sqrt(np.mean(diff**2)))
    abs_linf = float(np.max(np.abs(diff)))
    ref_l2 = float(np.sqrt(np.mean(ref**2)))
    ref_linf = float(np.max(np.abs(ref)))
    return {
        "abs_l2": abs_l2,
        "abs_linf": abs_linf,
        "rel_l2": abs_l2 / ref_l2 if ref_l2 > 0 else np.inf,
        "rel_linf": abs_linf / ref_linf if ref_linf > 0 else np.inf,
    }


@dataclass
class ErrorReport:
    """Rows of per-case error metrics in the standard table schema."""

    rows: list = field(default_factory=list)
    model_id: str = ""
    grid_desc: str = ""

    def add(self, case, pred, ref):
        row = {"case": case}
        row.update(error_metrics(pred, ref))
        self.rows.append(row)
        return row


def evaluate_fields(cases, model_id="", grid_desc=""):
    """cases: iterable of (label, predicted, reference) triples."""
    rep = ErrorReport(model_id=model_id, grid_desc=grid_desc)
    for label, pred, ref in cases:
        rep.add(label, pred, ref)
    return rep


def write_report_csv(report, path):
    cols = ["case", "abs_l2", "abs_linf", "rel_l2", "rel_linf"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in report.rows:
            w.writerow([row[c] for c in cols])
