"""Command line front end.

Subcommands: train, eval, export-topology, print-config. Heavy modules
load inside the handlers so --threads can cap the BLAS pools before
numpy comes up.
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topopinn",
        description="Meshless topology optimization with physics-informed "
                    "networks and movable circle patches.")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap the numeric thread pools")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p, required=True):
        p.add_argument("--preset", default=None,
                       help="named built-in experiment")
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
        p.set_defaults(config_required=required)

    p = sub.add_parser("train", help="run an experiment and write artifacts")
    add_config_args(p)
    p.add_argument("--output", default=None, help="artifact directory")
    p.add_argument("--svg", action="store_true",
                   help="also render topology.svg")

    p = sub.add_parser("eval", help="evaluate a checkpoint against a reference")
    p.add_argument("--checkpoint", required=True)
    add_config_args(p, required=False)
    p.add_argument("--metrics", default="relative_l2",
                   help="comma list: relative_l2, nmae, boundary_flux, lift_drag")
    p.add_argument("--reference", default="none",
                   help="none, annulus, or csv:PATH")
    p.add_argument("--grid", type=int, default=128,
                   help="evaluation grid resolution")
    p.add_argument("--output", default=None,
                   help="metrics.json path (stdout when omitted)")

    p = sub.add_parser("export-topology",
                       help="extract the topology from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    add_config_args(p, required=False)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="density cut for dt runs")
    p.add_argument("--sweep", default=None,
                   help="comma list of thresholds to report side by side")
    p.add_argument("--grid", type=int, default=128,
                   help="density grid resolution for dt runs")
    p.add_argument("--output", default=None,
                   help="topology.json path (stdout when omitted)")
    p.add_argument("--svg", default=None, help="optional SVG path")

    p = sub.add_parser("print-config",
                       help="print the fully resolved config")
    add_config_args(p, required=False)
    return parser


# ---------------------------------------------------------------------------
# config resolution


def _resolve_config(args, meta=None):
    from .config import (apply_override, load_config, parse_config_text)
    from .errors import ConfigError
    from .presets import make_preset

    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        cfg = make_preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    elif meta is not None and "config" in meta:
        cfg = parse_config_text(meta["config"])
    elif getattr(args, "config_required", True):
        raise ConfigError("a --preset or --config is required")
    else:
        from .config import default_config
        cfg = default_config()
    for item in args.overrides:
        apply_override(cfg, item)
    return cfg


def _patches_from_state(state):
    from .geometry import CirclePatch
    return [CirclePatch(float(x), float(y)) for x, y in state.gamma]


def _field_source(state, mlp, normalizer):
    from .network import as_field
    return as_field(state.params, normalizer, mlp)


def _predict(source, points, out_dim):
    import numpy as np

    from . import autodiff as ad
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=0)
    outs = source(X, Y)[:out_dim]
    cols = []
    for jet in outs:
        val = np.asarray(jet.f.value, dtype=np.float64)
        cols.append(np.broadcast_to(val, (len(points),)))
    return np.column_stack(cols)


def _write_field_csv(path, points, values, names) -> None:
    lines = ["x,y," + ",".join(names)]
    for p, row in zip(points, values):
        lines.append(",".join([_fmt(p[0]), _fmt(p[1])]
                              + [_fmt(v) for v in row]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _export_topology_dict(cfg, state, mlp, normalizer, grid_n, threshold,
                          sweep=None):
    from .config import build_regions
    from .export import density_on_grid, dt_topology, lt_topology

    if cfg.run.mode == "lt":
        return lt_topology(_patches_from_state(state))
    _, core = build_regions(cfg)
    source = _field_source(state, mlp, normalizer)
    xs, ys, rho_hat = density_on_grid(source, core, grid_n, grid_n,
                                      sharpness=cfg.pde.density_sharpness)
    if sweep:
        return {
            "mode": "dt",
            "sweep": [dt_topology(rho_hat, xs, ys, t) for t in sweep],
        }
    topo = dt_topology(rho_hat, xs, ys, threshold)
    if topo.get("status") == "empty":
        print("warning: no density above threshold; topology is empty",
              file=sys.stderr)
    return topo


# ---------------------------------------------------------------------------
# handlers


def cmd_train(args) -> int:
    from .config import (build_regions, config_hash, config_to_text,
                         prepare_run)
    from .export import write_topology
    from .metrics import metric_grid
    from .training import (checkpoint_save, train, write_gamma_csv,
                           write_loss_csv)
    import json

    cfg = _resolve_config(args)
    out_dir = args.output or cfg.run.output_dir or os.path.join(
        "runs", cfg.run.name)
    os.makedirs(out_dir, exist_ok=True)

    state, samples, setup = prepare_run(cfg)
    state, history = train(state, samples, setup)

    write_loss_csv(os.path.join(out_dir, "loss.csv"), history)
    write_gamma_csv(os.path.join(out_dir, "gamma.csv"), history)

    meta = {
        "name": cfg.run.name,
        "config": config_to_text(cfg),
        "config_hash": config_hash(cfg),
        "epochs_run": state.epoch,
    }
    checkpoint_save(os.path.join(out_dir, "checkpoint.bin"), state,
                    setup.mlp, setup.normalizer, meta)

    topo = _export_topology_dict(cfg, state, setup.mlp, setup.normalizer,
                                 grid_n=128, threshold=0.5)
    _, core = build_regions(cfg)
    svg_path = os.path.join(out_dir, "topology.svg") if args.svg else None
    write_topology(os.path.join(out_dir, "topology.json"), topo,
                   svg_path=svg_path, patches=_patches_from_state(state),
                   region=core)

    final = history.breakdowns[-1]
    entries = [
        {"metric": f"final_{name}", "field": "loss",
         "value": getattr(final, name), "config": meta["config_hash"]}
        for name in type(final).FIELDS
    ]
    entries.append({"metric": "epochs_run", "field": "run",
                    "value": state.epoch, "config": meta["config_hash"]})
    with open(os.path.join(out_dir, "metrics.json"), "w",
              encoding="utf-8") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")

    points, keep = metric_grid(core, _patches_from_state(state))
    source = _field_source(state, setup.mlp, setup.normalizer)
    values = _predict(source, points[keep], setup.ctx.problem.out_dim)
    _write_field_csv(os.path.join(out_dir, "field.csv"), points[keep], values,
                     setup.ctx.problem.field_names)

    print(f"run {cfg.run.name}: {state.epoch} epochs, "
          f"final total loss {final.total:.6g}, artifacts in {out_dir}")
    return 0


def _reference_values(reference, cfg, points, out_dim):
    """Reference values and validity mask at the grid points."""
    import numpy as np

    from .errors import ConfigError
    from .reference import ANNULUS_INNER, annulus_temperature

    if reference == "annulus":
        if out_dim != 1:
            raise ConfigError("annulus reference needs a single-field problem")
        r = np.hypot(points[:, 0], points[:, 1])
        valid = (r >= ANNULUS_INNER) & (r <= cfg.data.annulus_outer)
        values = np.zeros((len(points), 1))
        values[valid, 0] = annulus_temperature(
            points[valid], flux=cfg.data.annulus_flux,
            outer_radius=cfg.data.annulus_outer)
        mask = np.zeros((len(points), 1), dtype=bool)
        mask[valid, 0] = True
        return values, mask
    raise ConfigError(f"unknown reference {reference!r}")


def cmd_eval(args) -> int:
    import json

    import numpy as np

    from .config import (build_context, build_regions, config_hash,
                         validate_config)
    from .errors import ConfigError
    from .metrics import (boundary_flux, lift_drag, metric_grid, nmae,
                          relative_l2)
    from .sampling import load_measurements_csv
    from .training import checkpoint_load

    state, mlp, normalizer, meta = checkpoint_load(args.checkpoint)
    cfg = _resolve_config(args, meta)
    validate_config(cfg)
    ctx = build_context(cfg)
    out_dim = ctx.problem.out_dim
    names = ctx.problem.field_names
    source = _field_source(state, mlp, normalizer)
    patches = _patches_from_state(state)
    chash = config_hash(cfg)

    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    known = ("relative_l2", "nmae", "boundary_flux", "lift_drag")
    for m in wanted:
        if m not in known:
            raise ConfigError(
                f"unknown metric {m!r}; choices: {', '.join(known)}")

    pred = ref = mask = None
    if args.reference.startswith("csv:"):
        ms = load_measurements_csv(args.reference[4:], out_dim)
        pred = _predict(source, ms.points, out_dim)
        ref, mask = ms.values, ms.mask
    elif args.reference != "none":
        _, core = build_regions(cfg)
        points, keep = metric_grid(core, patches, args.grid, args.grid)
        ref_all, mask_all = _reference_values(args.reference, cfg, points,
                                              out_dim)
        pred = _predict(source, points[keep], out_dim)
        ref, mask = ref_all[keep], mask_all[keep]

    entries = []
    for metric in wanted:
        if metric in ("relative_l2", "nmae"):
            if ref is None:
                raise ConfigError(f"{metric} needs --reference")
            fn = relative_l2 if metric == "relative_l2" else nmae
            for c, name in enumerate(names):
                sel = mask[:, c]
                if not sel.any():
                    continue
                entries.append({
                    "metric": metric, "field": name,
                    "value": fn(pred[sel, c], ref[sel, c]),
                    "config": chash,
                })
        elif metric == "boundary_flux":
            if not patches:
                raise ConfigError("boundary_flux needs circle patches")
            for i, patch in enumerate(patches):
                _, flux = boundary_flux(source, patch)
                mean = float(np.mean(flux))
                entries.append({"metric": "boundary_flux_mean",
                                "field": f"patch{i}", "value": mean,
                                "config": chash})
                if cfg.boundary.kind == "neumann":
                    entries.append({"metric": "boundary_flux_error",
                                    "field": f"patch{i}",
                                    "value": abs(mean - cfg.boundary.flux),
                                    "config": chash})
        else:
            if not patches:
                raise ConfigError("lift_drag needs circle patches")
            if "p" not in names:
                raise ConfigError("lift_drag needs a pressure field")
            p_index = names.index("p")

            def pressure(X, Y):
                return [source(X, Y)[p_index]]

            lift, drag = lift_drag(pressure, patches)
            entries.append({"metric": "lift", "field": "p", "value": lift,
                            "config": chash})
            entries.append({"metric": "drag", "field": "p", "value": drag,
                            "config": chash})

    text = json.dumps(entries, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_export_topology(args) -> int:
    import json

    from .config import build_regions, validate_config
    from .errors import ConfigError
    from .export import write_topology
    from .training import checkpoint_load

    state, mlp, normalizer, meta = checkpoint_load(args.checkpoint)
    cfg = _resolve_config(args, meta)
    validate_config(cfg)

    sweep = None
    if args.sweep:
        try:
            sweep = [float(t) for t in args.sweep.split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --sweep list {args.sweep!r}") from exc

    topo = _export_topology_dict(cfg, state, mlp, normalizer,
                                 grid_n=args.grid, threshold=args.threshold,
                                 sweep=sweep)
    _, core = build_regions(cfg)
    if args.output:
        write_topology(args.output, topo, svg_path=args.svg,
                       patches=_patches_from_state(state), region=core)
    else:
        sys.stdout.write(json.dumps(topo, indent=2) + "\n")
        if args.svg:
            write_topology(os.devnull, topo, svg_path=args.svg,
                           patches=_patches_from_state(state), region=core)
    return 0


def cmd_print_config(args) -> int:
    from .config import config_to_text

    cfg = _resolve_config(args)
    sys.stdout.write(config_to_text(cfg))
    return 0


_HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "export-topology": cmd_export_topology,
    "print-config": cmd_print_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    from .errors import (CheckpointError, ConfigError, DivergenceError,
                         DomainError, NumericError)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, NumericError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
