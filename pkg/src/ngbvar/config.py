"""Run configuration: a single TOML file per reproducible run.

Minimal example::

    seed = 7

    [data]
    files = ["data.csv"]

    [[data.series]]
    id = "gdp_at"
    aggregation = "average"
    disaggregate = "chow-lin"
    indicator = "ip_at"
    transform = "growth"

    [model]
    lags = 2
    ordering = ["gdp_at", "mro", "eonia"]
    shock = { variable = "eonia", size_pp = -0.25, horizons = 36 }

    [prior]
    burn = 5000
    keep = 5000

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .irf import ShockSpec
from .panel import DEFAULT_SCHEMA, UNITS
from .sampler import NgHyper

COUNTRIES = ("at", "be", "de", "gr", "it", "pt", "es")
COUNTRY_ROLES_BEFORE = ("hicp", "gdp", "ciss", "loan_demand", "loan_supply")
COUNTRY_ROLES_AFTER = ("bond", "mfi")

TRANSFORMS = ("none", "invert", "growth", "log-return")
DISAGG_METHODS = ("spline", "chow-lin")


def euro_area_ordering(countries=COUNTRIES) -> list[str]:
    """The 52-variable identification order with country blocks per role.

    Loan supply enters inverted (id suffix ``_inv``).
    """
    ids = []
    for role in COUNTRY_ROLES_BEFORE:
        suffix = "_inv" if role == "loan_supply" else ""
        ids += [f"{role}_{c}{suffix}" for c in countries]
    ids += ["mro", "eonia"]
    for role in COUNTRY_ROLES_AFTER:
        ids += [f"{role}_{c}" for c in countries]
    ids.append("stoxx")
    return ids


@dataclass(frozen=True)
class SeriesRule:
    id: str
    unit: str = "percent"
    aggregation: str = "average"
    disaggregate: str = "spline"
    indicator: str | None = None
    rho: float | str = "ml"
    intercept: bool = False
    transform: str = "none"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ConfigError(f"series {self.id!r}: unknown unit {self.unit!r}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"series {self.id!r}: transform must be one of {TRANSFORMS}")
        if self.disaggregate not in DISAGG_METHODS:
            raise ConfigError(f"series {self.id!r}: disaggregate must be one of {DISAGG_METHODS}")
        if self.disaggregate == "chow-lin" and not self.indicator:
            raise ConfigError(f"series {self.id!r}: chow-lin needs an indicator")

    @property
    def output_id(self) -> str:
        return f"{self.id}_inv" if self.transform == "invert" else self.id


@dataclass(frozen=True)
class VariantSpec:
    """One robustness variant; exactly one field besides ``label`` is set."""

    label: str
    lags: int | None = None
    ordering: tuple[str, ...] | None = None
    shock: str | None = None

    def __post_init__(self):
        if self.ordering is not None:
            object.__setattr__(self, "ordering", tuple(self.ordering))

    def changes(self) -> list[str]:
        return [n for n in ("lags", "ordering", "shock") if getattr(self, n) is not None]

    def validate(self) -> None:
        changed = self.changes()
        if len(changed) > 1:
            raise ConfigError(f"variant {self.label!r} changes {changed}; one change per variant")
        if self.lags is not None and (not isinstance(self.lags, int) or self.lags < 1):
            raise ConfigError(f"variant {self.label!r}: lag order must be >= 1, got {self.lags}")


@dataclass(frozen=True)
class BatterySettings:
    spread_mro: str = "mro"
    spread_eonia: str = "eonia"
    spread_id: str = "mro_eonia_spread"
    spread_sign: float = 1.0
    reorder_below_shock: tuple[str, ...] = ()
    standard_variants: bool = False


@dataclass(frozen=True)
class RunConfig:
    files: tuple[Path, ...]
    ordering: tuple[str, ...]
    shock: ShockSpec
    lags: int = 2
    schema: dict = field(default_factory=lambda: dict(DEFAULT_SCHEMA))
    series: tuple[SeriesRule, ...] = ()
    hyper: NgHyper = field(default_factory=NgHyper)
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "svg")
    export_draw_irfs: bool = False
    variants: tuple[VariantSpec, ...] = ()
    battery: BatterySettings = field(default_factory=BatterySettings)
    plot_countries: tuple[str, ...] = COUNTRIES
    run_id: str = "run"
    source_text: str = ""
    base_dir: Path = Path(".")

    def __post_init__(self):
        if self.lags < 1:
            raise ConfigError(f"model.lags must be >= 1, got {self.lags}")
        if len(set(self.ordering)) != len(self.ordering):
            raise ConfigError("model.ordering contains duplicates")
        if self.shock.shock_variable not in self.ordering:
            raise ConfigError(f"shock variable {self.shock.shock_variable!r} not in model.ordering")
        ids = [s.id for s in self.series]
        if len(set(ids)) != len(ids):
            raise ConfigError("data.series lists an id twice")

    @property
    def seed(self) -> int:
        return self.hyper.seed

    def with_seed(self, seed: int) -> RunConfig:
        return replace(self, hyper=replace(self.hyper, seed=int(seed)))

    def rule_for(self, series_id: str) -> SeriesRule | None:
        for s in self.series:
            if s.id == series_id:
                return s
        return None

    def config_hash(self) -> str:
        """Hash of the source text plus effective seed."""
        h = hashlib.sha256(self.source_text.encode("utf-8"))
        h.update(f"\nseed={self.seed}".encode())
        return h.hexdigest()

    def all_variants(self) -> tuple[VariantSpec, ...]:
        if self.battery.standard_variants and not self.variants:
            return tuple(standard_variants(self))
        return self.variants


def standard_variants(config: RunConfig) -> list[VariantSpec]:
    """Three and four lags, loan variables below the shock, spread shock."""
    below = [v for v in config.battery.reorder_below_shock if v in config.ordering]
    if not below:
        below = [v for v in config.ordering if v.startswith(("loan_demand", "loan_supply"))]
    rest = [v for v in config.ordering if v not in below]
    pos = rest.index(config.shock.shock_variable) + 1
    reordered = rest[:pos] + below + rest[pos:]
    return [
        VariantSpec("lags3", lags=3),
        VariantSpec("lags4", lags=4),
        VariantSpec("reorder", ordering=tuple(reordered)),
        VariantSpec("spread", shock="spread"),
    ]


_PRIOR_KEYS = {f.name for f in fields(NgHyper)}


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def parse_config(doc: dict, base_dir: Path = Path("."), source_text: str = "") -> RunConfig:
    data = _section(doc, "data")
    model = _section(doc, "model")
    prior = dict(_section(doc, "prior"))
    output = _section(doc, "output")
    battery = _section(doc, "battery")
    plots = _section(doc, "plots")

    files = data.get("files")
    if not files:
        raise ConfigError("data.files must list at least one CSV file")
    files = tuple((base_dir / f).resolve() for f in files)

    if "ordering" not in model:
        raise ConfigError("model.ordering is required")
    shock_doc = model.get("shock")
    if not isinstance(shock_doc, dict) or "variable" not in shock_doc:
        raise ConfigError("model.shock must declare exactly one shock variable")
    try:
        shock = ShockSpec(
            shock_variable=shock_doc["variable"],
            size_pp=float(shock_doc.get("size_pp", -0.25)),
            horizons=int(shock_doc.get("horizons", 36)),
        )
        unknown = set(prior) - _PRIOR_KEYS
        if unknown:
            raise ConfigError(f"unknown [prior] keys: {sorted(unknown)}")
        if "seed" in doc:
            prior["seed"] = int(doc["seed"])
        hyper = NgHyper(**prior)
        rules = tuple(SeriesRule(**s) for s in data.get("series", []))
        variants = tuple(
            VariantSpec(
                label=v["label"],
                lags=v.get("lags"),
                ordering=v.get("ordering"),
                shock=v.get("shock"),
            )
            for v in doc.get("variants", [])
        )
        settings = BatterySettings(
            **{k: (tuple(v) if isinstance(v, list) else v) for k, v in battery.items()}
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    out_dir = Path(output.get("dir", "out"))
    return RunConfig(
        files=files,
        ordering=tuple(model["ordering"]),
        shock=shock,
        lags=int(model.get("lags", 2)),
        schema={**DEFAULT_SCHEMA, **data.get("schema", {})},
        series=rules,
        hyper=hyper,
        out_dir=out_dir if out_dir.is_absolute() else base_dir / out_dir,
        formats=tuple(output.get("formats", ("csv", "svg"))),
        export_draw_irfs=bool(output.get("export_draw_irfs", False)),
        variants=variants,
        battery=settings,
        plot_countries=tuple(plots.get("countries", COUNTRIES)),
        run_id=str(doc.get("run_id", "run")),
        source_text=source_text,
        base_dir=base_dir,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, base_dir=path.parent.resolve(), source_text=text)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"
