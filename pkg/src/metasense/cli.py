"""Command-line front end.

    metasense <command> [--config FILE] [--set KEY=VALUE ...] [--out DIR]

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
Failures print an error JSON to stderr; once the output directory is known
it is also written there as error.json.  Every successful run writes manifest.json holding the
fully resolved configuration; passing that manifest back through --config
reproduces the outputs byte for byte.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import DEFAULTS, ConfigError, resolve
from .exceptions import (DomainError, IntegrationError, MetasenseError,
                         NonConvergenceError)
from .integrate import IntegratorConfig
from .io import atomic_write, csv_text, dumps, read_trace_csv, sha256_file, sha256_text
from .lattice import (UnitCellGeometry, dispersion, local_resonance_frequency,
                      reduce_geometry)
from .sensor import (PiezoConfig, classify, coupled_response, piezo_voltage,
                     rmsd, sensitivity_curve, sensor_response,
                     short_time_rmsd, voltage_summary)
from .structure import (StructuralModel, case_spec, eigenfrequencies,
                        simulate, white_noise)
from .transmittance import extract_bdp, frequency_response

COMMANDS = {
    "band": "dispersion branches and band gaps of the unit-cell chain",
    "transmit": "transmittance curve, band segmentation and decision point",
    "dataset": "Latin Hypercube geometry samples labeled with their BDP",
    "train": "train the forward surrogate on a dataset CSV",
    "inverse": "recover geometry for a target BDP through the surrogate",
    "simulate": "structure or coupled structure/sensor run under white noise",
    "classify": "healthy/damaged metric from two probe traces or a preset case",
    "sweep": "sensitivity curve or BDP-vs-geometry grid",
}


class UsageError(Exception):
    pass


def _geometry(cfg):
    g = cfg["geometry"]
    return UnitCellGeometry.from_mm(a=g["a"], e=g["e"], mu=g["mu"], w=g["w"],
                                    phi=g["phi"], r=g["r"], h=g["h"])


def _chain(cfg):
    return reduce_geometry(_geometry(cfg), n_cells=cfg["n_cells"],
                           zeta=cfg["zeta"])


def _grid(cfg):
    g = cfg["grid"]
    if g["stop"] <= g["start"]:
        raise UsageError("grid.stop must exceed grid.start")
    return np.linspace(g["start"], g["stop"], g["points"])


def _integrator(cfg):
    return IntegratorConfig(rtol=cfg["integrator"]["rtol"],
                            atol=cfg["integrator"]["atol"])


def _structure(cfg):
    if cfg.get("model_file"):
        import yaml
        path = cfg["model_file"]
        if not os.path.exists(path):
            raise UsageError(f"model file {path} not found")
        with open(path, encoding="utf-8") as fh:
            return StructuralModel.from_dict(yaml.safe_load(fh))
    s = cfg["structure"]
    return StructuralModel.uniform(s["n_floors"], s["mass"], s["stiffness"],
                                   s["damper"])


def _need_file(path):
    if not os.path.exists(path):
        raise UsageError(f"input file {path} not found")
    return path


def run_band(cfg, inputs):
    chain = _chain(cfg)
    res = dispersion(chain, cfg["n_q"])
    summary = {"chain": chain.to_dict(),
               "local_resonance_hz": local_resonance_frequency(chain),
               "bandgaps": [{"f_low_hz": lo, "f_high_hz": hi}
                            for lo, hi in res.bandgaps]}
    return {"dispersion.csv": res.to_csv(),
            "bandgaps.json": dumps(summary["bandgaps"]),
            "summary.json": dumps(summary)}


def run_transmit(cfg, inputs):
    chain = _chain(cfg)
    probe = cfg["probe"]
    if isinstance(probe, str) and probe != "base":
        raise UsageError("probe must be an index, 'base' or null")
    curve = frequency_response(chain, _grid(cfg), probe=probe)
    seg = extract_bdp(curve)
    return {"transmittance.csv": curve.to_csv(),
            "segmentation.json": dumps(seg.to_dict()),
            "summary.json": dumps({"chain": chain.to_dict(),
                                   "segmentation": seg.to_dict()})}


_DESIGN_KEYS = ("h", "r", "e", "mu")


def run_dataset(cfg, inputs):
    from .surrogate import GEOMETRY_BOUNDS_MM, generate_dataset, lhs_sample
    n = cfg["n_samples"]
    free = [i for i, k in enumerate(_DESIGN_KEYS) if k not in cfg["fixed"]]
    X = np.zeros((n, 4))
    if n and free:
        X[:, free] = lhs_sample(GEOMETRY_BOUNDS_MM[free], n, cfg["seed"])
    for i, k in enumerate(_DESIGN_KEYS):
        if k in cfg["fixed"]:
            X[:, i] = cfg["fixed"][k]
    ds = generate_dataset(X, _geometry(cfg), n_cells=cfg["n_cells"],
                          zeta=cfg["zeta"], grid=_grid(cfg),
                          provenance={"seed": cfg["seed"]})
    summary = {"provenance": ds.provenance, "n_samples": len(ds),
               "n_ok": int(ds.ok.sum()),
               "status_counts": {s: ds.status.count(s)
                                 for s in sorted(set(ds.status))}}
    return {"dataset.csv": ds.to_csv(), "dataset.json": dumps(summary)}


def run_train(cfg, inputs):
    from .surrogate import Dataset, SurrogateRegressor
    path = _need_file(cfg["dataset"])
    inputs[path] = sha256_file(path)
    with open(path, encoding="utf-8") as fh:
        ds = Dataset.from_csv(fh.read())
    X, y = ds.usable()
    if X.shape[0] < 2:
        raise UsageError("dataset has fewer than two usable rows")
    model = SurrogateRegressor(
        width=cfg["width"], n_blocks=cfg["n_blocks"], epochs=cfg["epochs"],
        batch_size=cfg["batch_size"], learning_rate=cfg["learning_rate"],
        l2_lambda=cfg["l2_lambda"], noise_std=cfg["noise_std"],
        plateau_factor=cfg["plateau_factor"],
        plateau_patience=cfg["plateau_patience"],
        val_fraction=cfg["val_fraction"], random_state=cfg["seed"]).fit(X, y)
    rep = dict(model.report_)
    hist = rep.pop("history")
    rows = zip(range(len(hist["train_loss"])), hist["train_loss"],
               hist["val_loss"], hist["lr"])
    return {"model.json": model.to_json() + "\n",
            "report.json": dumps(rep),
            "history.csv": csv_text(["epoch", "train_loss", "val_loss", "lr"],
                                    rows)}


def run_inverse(cfg, inputs):
    from .surrogate import InverseConfig, SurrogateRegressor, inverse_design
    from .surrogate.dataset import label_geometry
    path = _need_file(cfg["model"])
    inputs[path] = sha256_file(path)
    with open(path, encoding="utf-8") as fh:
        model = SurrogateRegressor.from_json(fh.read())
    fixed = {i: cfg["fixed"][k] for i, k in enumerate(_DESIGN_KEYS)
             if k in cfg["fixed"]}
    icfg = InverseConfig(cfg["target_bdp"], cfg["trials"], cfg["iterations"],
                         cfg["learning_rate"], fixed,
                         threshold=cfg["threshold"], seed=cfg["seed"])
    res = inverse_design(model, icfg)
    out = res.to_dict()
    hist = out["trials"]
    rows = [(t, i, loss) for t, tr in enumerate(hist)
            for i, loss in enumerate(tr.pop("loss_history"))]
    out["geometry"] = dict(zip(_DESIGN_KEYS, res.geometry_mm.tolist()))
    if cfg["verify"]:
        bdp = label_geometry(res.geometry_mm, _geometry(cfg),
                             n_cells=cfg["n_cells"], zeta=cfg["zeta"],
                             grid=_grid(cfg))
        out["verified_bdp_hz"] = bdp
        out["verified_rel_error"] = abs(bdp - cfg["target_bdp"]) \
            / cfg["target_bdp"]
    return {"inverse.json": dumps(out),
            "trajectories.csv": csv_text(["trial", "iteration", "loss"], rows)}


def run_simulate(cfg, inputs):
    model = _structure(cfg)
    if cfg["model_file"]:
        inputs[cfg["model_file"]] = sha256_file(cfg["model_file"])
    if cfg["damage"] > 0:
        model = model.scaled(1 - cfg["damage"])
    if cfg["abrupt"]:
        model = model.with_abrupt_damage(cfg["abrupt"]["time"],
                                         cfg["abrupt"]["fraction"])
    force = white_noise(cfg["noise_std"], cfg["duration"], cfg["rate"],
                        cfg["seed"])
    integ = _integrator(cfg)
    out = {}
    summary = {"eigenfrequencies_hz": eigenfrequencies(model).tolist()}
    if cfg["mode"] == "structure":
        floors = simulate(model, force, integ)
        top = floors[-1]
    else:
        run = coupled_response(model, _chain(cfg), force, integ)
        top = run.top
        probe = run.probe
        st = short_time_rmsd(probe, cfg["window"])
        volts = piezo_voltage(run.sensor,
                              PiezoConfig(cfg["piezo_coupling"]))
        out["probe.csv"] = probe.to_csv("probe_mm", 1e3)
        out["short_time_rmsd.csv"] = st.to_csv("rmsd_mm")
        out["voltage.csv"] = volts.to_csv("volts")
        summary["sensor_rmsd_mm"] = rmsd(probe)
        summary["voltage"] = voltage_summary(volts)
    out["structure_top.csv"] = top.to_csv("top_mm", 1e3)
    out["structure_short_time_rmsd.csv"] = short_time_rmsd(
        top, cfg["window"]).to_csv("rmsd_mm")
    summary["structure_rmsd_mm"] = rmsd(top)
    out["summary.json"] = dumps(summary)
    return out


def run_classify(cfg, inputs):
    integ = _integrator(cfg)
    if cfg["source"] == "case":
        chain = _chain(cfg)
        traces = [sensor_response(chain, case_spec(
            cfg["case"], state, cfg["duration"], cfg["sample_rate"]), integ)
            for state in ("healthy", "damaged")]
    else:
        if not cfg["healthy"] or not cfg["damaged"]:
            raise UsageError("source 'files' needs healthy and damaged paths")
        traces = []
        for key in ("healthy", "damaged"):
            path = _need_file(cfg[key])
            inputs[path] = sha256_file(path)
            traces.append(read_trace_csv(path))
    window = tuple(cfg["window"]) if cfg["window"] else None
    res = classify(traces[0], traces[1], cfg["measure"], window)
    return {"classification.json": dumps(res.to_dict())}


def run_sweep(cfg, inputs):
    if cfg["kind"] == "sensitivity":
        curve = sensitivity_curve(_structure(cfg), _chain(cfg),
                                  cfg["damage_levels"], cfg["seed"],
                                  cfg["duration"], cfg["noise_std"],
                                  cfg["rate"], _integrator(cfg))
        rows = [(d * 100, r) for d, r in curve]
        return {"sensitivity.csv": csv_text(["damage_pct", "rmsd_mm"], rows)}
    from .surrogate.dataset import label_geometry
    g = cfg["geometry"]
    rows = []
    for r in cfg["r_values"]:
        for h in cfg["h_values"]:
            try:
                bdp = label_geometry([h, r, g["e"], g["mu"]], _geometry(cfg),
                                     n_cells=cfg["n_cells"], zeta=cfg["zeta"],
                                     grid=_grid(cfg))
                rows.append((r, h, bdp, "ok"))
            except MetasenseError as exc:
                rows.append((r, h, float("nan"), type(exc).__name__))
    return {"bdp_grid.csv": csv_text(["r_mm", "h_mm", "bdp_hz", "status"],
                                     rows)}


RUNNERS = {"band": run_band, "transmit": run_transmit, "dataset": run_dataset,
           "train": run_train, "inverse": run_inverse,
           "simulate": run_simulate, "classify": run_classify,
           "sweep": run_sweep}


def build_parser():
    p = argparse.ArgumentParser(
        prog="metasense",
        description="Lumped metamaterial sensor toolkit.",
        epilog="Config precedence: defaults < --config file < --set flags.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    for name, help_text in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", metavar="FILE",
                        help="YAML config or a manifest.json from an earlier run")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override one config value; dotted keys reach "
                             "nested values (repeatable)")
        sp.add_argument("--out", default=os.path.join("runs", name),
                        metavar="DIR", help="output directory (default: %(default)s)")
        sp.add_argument("--print-config", action="store_true",
                        help="print the resolved config and exit")
        if "seed" in DEFAULTS[name]:
            sp.add_argument("--seed", type=int, default=None,
                            help="shortcut for --set seed=N")
    return p


def _report_error(out_dir, exc, code):
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, IntegrationError):
        err["time"] = exc.time
    if isinstance(exc, NonConvergenceError) and exc.best is not None:
        best = exc.best.to_dict()
        for t in best["trials"]:
            t.pop("loss_history")
        err["best"] = best
    text = dumps(err)
    sys.stderr.write(text)
    if out_dir is not None:
        try:
            atomic_write(os.path.join(out_dir, "error.json"), text)
        except OSError:
            pass


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = resolve(args.command, args.config, overrides)
    except ConfigError as exc:
        _report_error(None, exc, 2)
        return 2
    if args.print_config:
        sys.stdout.write(dumps(cfg))
        return 0
    inputs = {}
    try:
        outputs = RUNNERS[args.command](cfg, inputs)
    except (UsageError, DomainError) as exc:
        _report_error(args.out, exc, 2)
        return 2
    except (MetasenseError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _report_error(args.out, exc, 1)
        return 1
    for name, text in outputs.items():
        atomic_write(os.path.join(args.out, name), text)
    manifest = {"artifact": "metasense", "version": __version__,
                "command": args.command, "config": cfg,
                "inputs": inputs,
                "outputs": {n: sha256_text(t) for n, t in outputs.items()}}
    atomic_write(os.path.join(args.out, "manifest.json"), dumps(manifest))
    return 0


if __name__ == "__main__":
    sys.exit(main())
