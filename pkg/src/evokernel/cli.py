"""Command-line entry point.

One JSON config per run; subcommands: datagen, train, eval, evolve, uq,
oracle, report.  Artifacts land in the output directory together with a
manifest (config hash, seeds, package version, artifact list) so any run
can be reproduced from its manifest.  Exit codes: 0 success, 1 runtime
error, 2 config validation error.

Heavy imports happen inside main() after --threads is applied, so the BLAS
thread count can still be pinned from the command line.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

USAGE_COMMANDS = ("datagen", "train", "eval", "evolve", "uq", "oracle", "report")


class ValidationError(ValueError):
    pass


_SCHEMAS = {
    "datagen": {"version", "command", "seed", "out", "dataset"},
    "train": {"version", "command", "seed", "out", "model", "data", "curve",
              "points", "train"},
    "eval": {"version", "command", "seed", "out", "checkpoint", "suite"},
    "evolve": {"version", "command", "seed", "out", "problem", "backend"},
    "uq": {"version", "command", "seed", "out", "backend", "uq"},
    "oracle": {"version", "command", "seed", "out"},
    "report": {"version", "command", "seed", "out", "runs"},
}

_SUB_SCHEMAS = {
    "dataset": {"kind", "kappas", "n_g", "per_kappa", "n", "curve", "coupled",
                "length_scales", "mix", "sigma_range", "spacing", "margin"},
    "model": {"kind", "coupled", "hidden_k", "hidden_g", "internal", "width",
              "latent", "depth"},
    "data": {"path"},
    "curve": {"kind", "n_bd", "side", "radius", "base", "amp", "lobes"},
    "points": {"domain", "n", "spacing", "margin"},
    "train": {"epochs", "batch_size", "lr", "lr_decay", "log_every"},
    "suite": {"kind", "kappas", "n_bd", "eval_n", "eval_lo", "eval_hi"},
    "problem": {"equation", "scheme", "splitting", "tau", "n_steps", "a", "b",
                "theta", "w", "kappa_diff", "store_fields"},
    "backend": {"kind", "domain", "boundary_checkpoint", "source_checkpoint",
                "lam_range", "coupled"},
    "uq": {"samples", "probe", "tau", "n_steps", "mean", "std", "clip"},
}


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    cmd = cfg.get("command")
    if cmd not in _SCHEMAS:
        raise ValidationError(f"command must be one of {sorted(_SCHEMAS)}, got {cmd!r}")
    if cfg.get("version") != 1:
        raise ValidationError("config version must be 1")
    unknown = set(cfg) - _SCHEMAS[cmd]
    if unknown:
        raise ValidationError(f"unknown top-level keys for {cmd}: {sorted(unknown)}")
    for key, allowed in _SUB_SCHEMAS.items():
        section = cfg.get(key)
        if section is None:
            continue
        if key == "backend" and "domain" in section:
            extra = set(section["domain"]) - {"kind", "n", "n_bd", "spacing", "margin"}
            if extra:
                raise ValidationError(f"unknown backend.domain keys: {sorted(extra)}")
        if isinstance(section, dict):
            extra = set(section) - allowed
            if extra:
                raise ValidationError(f"unknown keys in '{key}': {sorted(extra)}")
    prob = cfg.get("problem")
    if prob and prob.get("equation") == "wave":
        theta = prob.get("theta", 0.5)
        if not (0.0 <= theta <= 1.0):
            raise ValidationError(f"wave theta={theta} outside the [0, 1] bound")
    return cfg


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out, cfg, artifacts, extra=None):
    from . import __version__
    manifest = {
        "command": cfg["command"],
        "config_sha256": hashlib.sha256(
            json.dumps(cfg, sort_keys=True).encode()).hexdigest(),
        "seed": cfg.get("seed"),
        "version": __version__,
        "artifacts": sorted(artifacts),
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _kappa_list(spec):
    import numpy as np
    if isinstance(spec, list):
        return [float(k) for k in spec]
    return [float(k) for k in np.linspace(spec["start"], spec["stop"], spec["count"])]


def _build_curve_grid(section):
    from .geometry import make_curve, sample_quadrature
    params = {k: v for k, v in section.items() if k not in ("kind", "n_bd")}
    curve = make_curve(section.get("kind", "square"), **params)
    return curve, sample_quadrature(curve, section.get("n_bd", 256))


def cmd_datagen(cfg, out):
    import numpy as np
    from . import datagen
    from .geometry import petal_lattice, square_lattice
    d = cfg["dataset"]
    kappas = _kappa_list(d["kappas"])
    seed = cfg.get("seed", 0)
    kind = d["kind"]
    if kind == "boundary":
        _, grid = _build_curve_grid(d.get("curve", {}))
        ds = datagen.build_boundary_dataset(
            kappas, d.get("n_g", 2000), grid, seed,
            length_scales=tuple(d.get("length_scales", (0.2, 0.4, 0.8, 1.6))),
            coupled=d.get("coupled", False))
    elif kind == "source":
        ds = datagen.build_source_dataset(
            kappas, d.get("per_kappa", 2000), d.get("n", 41), seed,
            mix=d.get("mix", 0.5), coupled=d.get("coupled", False))
    elif kind == "source-offlattice":
        curve, grid = _build_curve_grid(d.get("curve", {"kind": "petal"}))
        interior = petal_lattice(curve, d.get("spacing", 0.03), d.get("margin"))
        ds = datagen.build_offlattice_source_dataset(
            kappas, d.get("per_kappa", 500), grid, interior.points, seed)
    else:
        raise ValidationError(f"unknown dataset kind {kind!r}")
    path = os.path.join(out, "dataset.bin")
    datagen.save_dataset(ds, path)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"records": int(ds.n_records), "hash": ds.content_hash(),
                   "kind": ds.kind}, fh, indent=2, sort_keys=True)
    _write_manifest(out, cfg, ["dataset.bin", "summary.json"])
    return 0


def cmd_train(cfg, out):
    import csv

    import numpy as np
    from . import datagen, training
    from .kernels import ScalarKernelSpec, SystemKernelSpec, boundary_kernel
    from .geometry import petal_lattice, square_lattice
    from .nn import save_checkpoint

    ds = datagen.load_dataset(cfg["data"]["path"])
    m = cfg["model"]
    tc = cfg.get("train", {})
    tcfg = training.TrainConfig(
        epochs=tc.get("epochs", 20000), batch_size=tc.get("batch_size", 128),
        lr=tc.get("lr", 1e-3), lr_decay=tc.get("lr_decay", 0.5),
        seed=cfg.get("seed", 0),
        hidden_k=tuple(m.get("hidden_k", (192, 192))),
        hidden_g=tuple(m.get("hidden_g", (256, 256))),
        internal=m.get("internal"),
        log_every=tc.get("log_every", 500))
    coupled = m.get("coupled", False)
    if m["kind"] == "boundary":
        _, grid = _build_curve_grid(cfg.get("curve", {}))
        spec_cls = SystemKernelSpec if coupled else ScalarKernelSpec
        kmats = [boundary_kernel(spec_cls(float(k)), grid) for k in ds.kappas]
        model, info = training.train_boundary_model(tcfg, ds, kmats)
    else:
        psec = cfg.get("points", {"domain": "square", "n": 41})
        if psec.get("domain", "square") == "square":
            points = square_lattice(psec.get("n", 41)).points
        else:
            curve, _ = _build_curve_grid(cfg.get("curve", {"kind": "petal"}))
            points = petal_lattice(curve, psec.get("spacing", 0.03),
                                   psec.get("margin")).points
        if m["kind"] == "source":
            model, info = training.train_source_model(tcfg, ds, points,
                                                      coupled=coupled)
        elif m["kind"] == "branch_trunk":
            model, info = training.train_branch_trunk(
                tcfg, ds, points, m.get("width", 256), m.get("latent", 512),
                m.get("depth", 3), coupled=coupled)
        else:
            raise ValidationError(f"unknown model kind {m['kind']!r}")
    meta = {"seed": tcfg.seed, "epochs": tcfg.epochs,
            "final_loss": info["final_loss"],
            "loss_tail": info["loss_trace"][-5:], "data_hash": info["data_hash"],
            "kappas": [float(k) for k in ds.kappas]}
    save_checkpoint(model, os.path.join(out, "model.ckpt"), meta)
    with open(os.path.join(out, "training_curve.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss"])
        w.writerows(info["loss_trace"])
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"final_loss": info["final_loss"],
                   "train_seconds": info["train_seconds"]}, fh, indent=2,
                  sort_keys=True)
    _write_manifest(out, cfg, ["model.ckpt", "training_curve.csv", "summary.json"])
    return 0


def cmd_eval(cfg, out):
    from . import experiments
    from .nn import load_checkpoint
    from .training import write_report_csv

    model, meta = load_checkpoint(cfg["checkpoint"])
    s = cfg["suite"]
    kappas = _kappa_list(s["kappas"])
    kw = {k: s[k] for k in ("n_bd", "eval_n", "eval_lo", "eval_hi") if k in s}
    kind = s["kind"]
    if kind == "scalar-boundary":
        rep = experiments.eval_scalar_boundary(model, kappas, **kw)
    elif kind == "scalar-source":
        rep = experiments.eval_scalar_source(model, kappas)
    elif kind == "system-source":
        rep = experiments.eval_system_source(model, kappas)
    elif kind == "system-boundary":
        rep = experiments.eval_system_boundary(model, kappas, **kw)
    else:
        raise ValidationError(f"unknown suite kind {kind!r}")
    write_report_csv(rep, os.path.join(out, "errors.csv"))
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"experiment": kind, "rows": rep.rows}, fh, indent=2,
                  sort_keys=True)
    _write_manifest(out, cfg, ["errors.csv", "summary.json"])
    return 0


def _build_backend(section):
    from .evolution import ClassicalBackend, NekmBackend, PointCloudDomain, \
        SquareLatticeDomain
    from .geometry import make_curve, petal_lattice
    from .nn import load_checkpoint

    dom_cfg = section.get("domain", {})
    dkind = dom_cfg.get("kind", "square")
    if dkind == "square":
        domain = SquareLatticeDomain(n=dom_cfg.get("n", 41),
                                     n_bd=dom_cfg.get("n_bd", 256))
    elif dkind == "petal":
        curve = make_curve("petal")
        interior = petal_lattice(curve, dom_cfg.get("spacing", 0.03),
                                 dom_cfg.get("margin"))
        domain = PointCloudDomain(curve, interior, n_bd=dom_cfg.get("n_bd", 256))
    else:
        raise ValidationError(f"unknown backend domain {dkind!r}")
    if section.get("kind", "classical") == "classical":
        return ClassicalBackend(domain)
    bnd, _ = load_checkpoint(section["boundary_checkpoint"])
    src, _ = load_checkpoint(section["source_checkpoint"])
    return NekmBackend(domain, bnd, src, tuple(section.get("lam_range", (0.05, 0.1))),
                       coupled=section.get("coupled", False))


def cmd_evolve(cfg, out):
    import csv

    import numpy as np
    from . import experiments
    from .evolution import run_heat, run_schrodinger, run_wave
    from .plotting import svg_heatmap

    backend = _build_backend(cfg["backend"])
    p = cfg["problem"]
    eq = p["equation"]
    tau, n_steps = p["tau"], p["n_steps"]
    store = bool(p.get("store_fields", False))
    if eq == "heat":
        a = p.get("a", 2**-0.5)
        b = p.get("b", float(np.sqrt(1.0 - a * a)))
        prob = experiments.heat_problem(backend.domain, a, b, tau, n_steps)
        res = run_heat(prob, backend, scheme=p.get("scheme", "be"),
                       store_fields=store)
    elif eq == "wave":
        prob = experiments.wave_problem(backend.domain, p.get("a", 0.6), tau,
                                        n_steps, theta=p.get("theta", 0.5))
        res = run_wave(prob, backend, store_fields=store)
    elif eq == "schrodinger":
        prob = experiments.schrodinger_problem(backend.domain, tau, n_steps,
                                               w=p.get("w", 1.0))
        res = run_schrodinger(prob, backend, splitting=p.get("splitting", "strang"),
                              store_fields=store)
    else:
        raise ValidationError(f"unknown equation {eq!r}")
    with open(os.path.join(out, "error_trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "abs_l2", "abs_linf", "rel_l2"])
        for e in res.error_trace:
            w.writerow([e["t"], e["abs_l2"], e["abs_linf"], e["rel_l2"]])
    final = res.final
    with open(os.path.join(out, "final_field.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"] + (["re", "im"] if np.iscomplexobj(final) else ["u"]))
        pts = backend.domain.points
        for i in range(pts.shape[0]):
            row = [pts[i, 0], pts[i, 1]]
            row += ([final[i].real, final[i].imag] if np.iscomplexobj(final)
                    else [final[i]])
            w.writerow(row)
    artifacts = ["error_trace.csv", "final_field.csv", "summary.json"]
    if store:
        pts = backend.domain.points
        for step, fld in res.fields.items():
            name = f"field_step_{step:04d}.csv"
            with open(os.path.join(out, name), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "y"] + (["re", "im"] if np.iscomplexobj(fld)
                                         else ["u"]))
                for i in range(pts.shape[0]):
                    row = [pts[i, 0], pts[i, 1]]
                    row += ([fld[i].real, fld[i].imag]
                            if np.iscomplexobj(fld) else [fld[i]])
                    w.writerow(row)
            artifacts.append(name)
    if hasattr(backend.domain, "n"):
        n = backend.domain.n
        field = final.real if np.iscomplexobj(final) else final
        svg_heatmap(os.path.join(out, "final_field.svg"),
                    field.reshape(n, n), title=f"{eq} final field")
        artifacts.append("final_field.svg")
    summary = {"experiment": f"{eq}-{p.get('scheme', p.get('splitting', ''))}",
               "tau": tau, "n_steps": n_steps,
               "final_rel_l2": res.error_trace[-1]["rel_l2"] if res.error_trace else None}
    if res.error_trace:
        from .evolution import trajectory_rel_l2
        summary["trajectory_rel_l2"] = trajectory_rel_l2(res)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_manifest(out, cfg, artifacts)
    return 0


def cmd_uq(cfg, out):
    import csv

    import numpy as np
    from .evolution import uq_run

    backend = _build_backend(cfg["backend"])
    u = cfg["uq"]
    stats, hist = uq_run(backend, u.get("samples", 10000), cfg.get("seed", 0),
                         probe=tuple(u.get("probe", (0.43, 0.2))),
                         tau=u.get("tau", 0.1), n_steps=u.get("n_steps", 10),
                         mean=u.get("mean", 0.5), std=u.get("std", 0.05),
                         clip=tuple(u.get("clip", (0.2, 0.8))))
    for name, arr in hist.items():
        counts, edges = np.histogram(arr, bins=40)
        with open(os.path.join(out, f"hist_{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for i in range(counts.size):
                w.writerow([edges[i], edges[i + 1], counts[i]])
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"experiment": "uq-heat-cn", **stats}, fh, indent=2, sort_keys=True)
    _write_manifest(out, cfg, [f"hist_{k}.csv" for k in hist] + ["summary.json"])
    return 0


def cmd_oracle(cfg, out):
    """Classical cross-validation suite; exits nonzero if a tolerance fails."""
    import numpy as np
    from . import bie, kernels
    from .experiments import scalar_boundary_solution, system_source_case
    from .fdsolver import fd_solve_complex, fd_solve_scalar
    from .geometry import make_curve, sample_quadrature, square_lattice

    checks = []
    # Nystrom on the disk: manufactured homogeneous solution
    kap = 0.05
    curve = make_curve("disk", radius=1.0)
    u = scalar_boundary_solution(kap)
    spec = kernels.ScalarKernelSpec(kap)
    errs = []
    for n in (64, 128, 256):
        grid = sample_quadrature(curve, n)
        km = kernels.boundary_kernel(spec, grid)
        phi = bie.nystrom_solve(km, u(grid.points))
        th = np.linspace(0, 2 * np.pi, 32, endpoint=False)
        pts = np.stack([0.5 * np.cos(th), 0.5 * np.sin(th)], 1)
        field = bie.eval_double_layer(spec, grid, phi, pts)
        errs.append(float(np.max(np.abs(field.values - u(pts)))))
    checks.append(("nystrom-disk-decay", errs[2] < 0.3 * errs[1] < 0.09 * errs[0],
                   errs))
    # FD oracle order
    c = np.sqrt(1 + 1 / kap)
    fd_errs = []
    for n in (21, 41, 81):
        xs = np.linspace(0, 1, n)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        gfield = np.exp(-c * X) * np.sin(Y)
        sol = fd_solve_scalar(kap, np.zeros_like(gfield), gfield)
        fd_errs.append(float(np.max(np.abs(sol.values - gfield))))
    orders = [np.log2(fd_errs[i] / fd_errs[i + 1]) for i in range(2)]
    checks.append(("fd-order-2", all(abs(o - 2.0) < 0.1 for o in orders), orders))
    # coupled-operator identity via finite differences
    lam = 0.1
    sysspec = kernels.SystemKernelSpec(lam)
    h = 1e-3
    x0 = np.array([0.4, 0.1])
    y0 = np.array([0.0, 0.0])
    def col(pt):
        G = kernels.system_g0(sysspec, pt[None, :], y0[None, :])[0]
        return G[0, 0], G[1, 0]
    def lap(fn):
        return ((fn(x0 + [h, 0])[0] + fn(x0 - [h, 0])[0] + fn(x0 + [0, h])[0]
                 + fn(x0 - [0, h])[0] - 4 * fn(x0)[0]) / h**2,
                (fn(x0 + [h, 0])[1] + fn(x0 - [h, 0])[1] + fn(x0 + [0, h])[1]
                 + fn(x0 - [0, h])[1] - 4 * fn(x0)[1]) / h**2)
    l1, l2 = lap(col)
    g1, g2 = col(x0)
    resid = max(abs(g1 - lam * l2), abs(lam * l1 + g2))
    checks.append(("system-kernel-identity", resid < 1e-4, resid))
    ok = all(c[1] for c in checks)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"experiment": "oracle-suite",
                   "checks": [{"name": n, "passed": bool(p), "value": repr(v)}
                              for n, p, v in checks]}, fh, indent=2, sort_keys=True)
    _write_manifest(out, cfg, ["summary.json"])
    for name, passed, value in checks:
        print(f"[oracle] {name}: {'pass' if passed else 'FAIL'} ({value})")
    return 0 if ok else 1


_GATES = {
    "heat-be": ("final_rel_l2", 0.015),
    "heat-cn": ("final_rel_l2", 0.015),
    "wave-": ("final_rel_l2", 0.01),
    "schrodinger-strang": ("trajectory_rel_l2", 0.02),
    "schrodinger-lie": ("trajectory_rel_l2", 0.05),
    "uq-heat-cn": ("rel_l2_error", 0.01),
}


def cmd_report(cfg, out):
    import csv
    rows = []
    for run_dir in cfg.get("runs", []):
        man_path = os.path.join(run_dir, "manifest.json")
        if not os.path.exists(man_path):
            raise RuntimeError(f"missing manifest in {run_dir}")
        with open(man_path) as fh:
            manifest = json.load(fh)
        summary = {}
        spath = os.path.join(run_dir, "summary.json")
        if os.path.exists(spath):
            with open(spath) as fh:
                summary = json.load(fh)
        exp = summary.get("experiment", manifest["command"])
        gate = next((g for key, g in _GATES.items() if exp.startswith(key)), None)
        if gate and gate[0] in summary and summary[gate[0]] is not None:
            value = summary[gate[0]]
            status = "pass" if value <= gate[1] else "fail"
            rows.append([run_dir, manifest["command"], exp, gate[0], value,
                         gate[1], status])
        else:
            rows.append([run_dir, manifest["command"], exp, "", "", "", "info"])
    with open(os.path.join(out, "index.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "command", "experiment", "gate", "value",
                    "threshold", "status"])
        w.writerows(rows)
    _write_manifest(out, cfg, ["index.csv"])
    return 0


_COMMANDS = {
    "datagen": cmd_datagen, "train": cmd_train, "eval": cmd_eval,
    "evolve": cmd_evolve, "uq": cmd_uq, "oracle": cmd_oracle,
    "report": cmd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="evokernel",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=USAGE_COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed-override", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        cfg.setdefault("command", args.command)
        if cfg["command"] != args.command:
            raise ValidationError(
                f"config command {cfg['command']!r} != CLI command {args.command!r}")
        if args.seed_override is not None:
            cfg["seed"] = args.seed_override
        validate_config(cfg)
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    try:
        return _COMMANDS[cfg["command"]](cfg, out)
    except Exception as exc:  # runtime failure -> exit 1 with message
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
