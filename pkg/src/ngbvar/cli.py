"""Command-line entry point.

Log verbosity comes from the ``NGBVAR_LOG`` environment variable
(``DEBUG``, ``INFO``, ``WARNING``; default ``WARNING``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import dump_json, load_config
from .disaggregate import chow_lin, spline_disaggregate
from .errors import ConfigError, NgbvarError, OrderingError
from .irf import irf_set, quantile_bands
from .panel import QUARTERLY, load_csv, write_long_csv
from .pipeline import EXIT_CONFIG, EXIT_DATA, EXIT_OK, run_pipeline
from .robustness import run_battery
from .sampler import PosteriorSample, build_design, run_mcmc
from .stages import load_sources, panel_for, prepare_series, validate_ids
from .synthetic import SyntheticDgp, generate_synthetic, synthetic_config


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", type=Path, required=config_required, help="run config (TOML)")
    p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output directory (overrides [output].dir)")
    p.add_argument("--threads", type=int, default=1, help="parallel chains / variants")


def _load(args):
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = args.out or config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return config, out


def _prepared_panel(config):
    prepared = prepare_series(config, load_sources(config))
    validate_ids(config, prepared)
    return prepared, panel_for(prepared, config.ordering)


def cmd_run(args) -> int:
    config, out = _load(args)
    return run_pipeline(config, out, threads=args.threads)


def cmd_ingest(args) -> int:
    config, out = _load(args)
    prepared, panel = _prepared_panel(config)
    panel.to_csv(out / "panel.csv")
    (out / "ingest_notes.json").write_text(dump_json(prepared.notes))
    print(f"panel: m={panel.m} t={panel.t} span={panel.dates[0]}..{panel.dates[-1]}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    config, out = _load(args)
    _, panel = _prepared_panel(config)
    sample = run_mcmc(build_design(panel, config.lags), config.hyper, threads=args.threads)
    sample.save(out / "draws", run_id=config.run_id)
    (out / "diagnostics.json").write_text(dump_json(sample.diagnostics))
    print(f"stored {len(sample)} draws in {out / 'draws'}")
    return EXIT_OK


def cmd_irf(args) -> int:
    config, out = _load(args)
    _, panel = _prepared_panel(config)
    draws_dir = args.draws or out / "draws"
    sample = PosteriorSample.load(draws_dir, design=build_design(panel, config.lags))
    bands = quantile_bands(irf_set(sample, config.shock, panel.ids))
    bands.to_csv(out / "irf_bands.csv")
    print(f"wrote {out / 'irf_bands.csv'}")
    return EXIT_OK


def cmd_battery(args) -> int:
    config, out = _load(args)
    result = run_battery(config, threads=args.threads)
    doc = result.write(out / "battery")
    (out / "battery.json").write_text(dump_json(doc))
    for v in doc["variants"]:
        print(f"{v['label']:>10}  {v['status']}  explosive share="
              f"{v.get('stability_share', float('nan')):.3f}")
    return EXIT_OK


def cmd_disaggregate(args) -> int:
    series = {s.id: s for s in load_csv(args.input)}
    targets = args.series or [sid for sid, s in series.items() if s.frequency == QUARTERLY]
    if not targets:
        raise ConfigError("no quarterly series to disaggregate")
    out = []
    for sid in targets:
        if sid not in series:
            raise ConfigError(f"series {sid!r} not in {args.input}")
        q = series[sid]
        if args.method == "chow-lin":
            if not args.indicator or args.indicator not in series:
                raise ConfigError("--method chow-lin needs --indicator <series_id> present in the input")
            rho = "ml" if args.rho == "ml" else float(args.rho)
            fit = chow_lin(q, series[args.indicator], args.rule, rho)
            print(f"{sid}: rho={fit.rho:.6f} beta={fit.beta.tolist()}")
            out.append(fit.monthly_estimate)
        else:
            res = spline_disaggregate(q, args.rule)
            if res.extrapolated:
                print(f"{sid}: extrapolated months {', '.join(res.extrapolated)}")
            out.append(res.series)
    write_long_csv(args.output, out)
    return EXIT_OK


def cmd_synthetic(args) -> int:
    ids = tuple(args.ids.split(",")) if args.ids else None
    dgp = SyntheticDgp(m=args.m, p=args.p, t=args.t, seed=args.seed or 0,
                       sparsity=args.sparsity, ids=ids)
    out = args.out or Path("synthetic")
    data = generate_synthetic(dgp, out)
    names = [s.id for s in data.series]
    shock = args.shock or names[-1]
    (out / "config.toml").write_text(
        synthetic_config(names, shock, seed=dgp.seed, lags=args.p, burn=args.burn,
                         keep=args.keep, standard_variants=args.battery)
    )
    print(f"wrote {out / 'data.csv'}, {out / 'truth.json'}, {out / 'config.toml'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngbvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ingest", help="build and write the aligned monthly panel")
    _common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("estimate", help="run the sampler and store posterior draws")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("irf", help="impulse-response bands from stored draws")
    _common(p)
    p.add_argument("--draws", type=Path, help="draw store directory (default <out>/draws)")
    p.set_defaults(func=cmd_irf)

    p = sub.add_parser("battery", help="robustness variants against the base model")
    _common(p)
    p.set_defaults(func=cmd_battery)

    p = sub.add_parser("disaggregate", help="quarterly -> monthly CSV conversion")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--series", action="append", help="series id (repeatable; default all quarterly)")
    p.add_argument("--method", choices=("spline", "chow-lin"), default="spline")
    p.add_argument("--indicator", help="monthly indicator series id for chow-lin")
    p.add_argument("--rule", choices=("sum", "average", "last"), default="average")
    p.add_argument("--rho", default="ml", help="'ml' or a fixed AR(1) value")
    p.set_defaults(func=cmd_disaggregate)

    p = sub.add_parser("synthetic", help="simulate a stable sparse VAR panel")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--t", type=int, default=300)
    p.add_argument("--sparsity", type=float, default=0.8)
    p.add_argument("--ids", help="comma-separated series ids")
    p.add_argument("--shock", help="shock variable for the generated config (default: last id)")
    p.add_argument("--burn", type=int, default=1000)
    p.add_argument("--keep", type=int, default=1000)
    p.add_argument("--battery", action="store_true", help="enable the four robustness variants")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_synthetic)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("NGBVAR_LOG", "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OrderingError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NgbvarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
