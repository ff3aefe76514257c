"""Scenario configuration, deterministic generation, execution and model comparison.

Config files are INI-style: named sections holding ``key = value`` lines,
``#`` starts a comment.  Every key is validated; unknown sections or keys are
errors.  See ``CONFIG_GRAMMAR`` for the full list.
"""
from __future__ import annotations

import configparser
import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (ChannelPlan, FiberParams, LinkConfig, SpanConfig, dbm_to_watt,
                   watt_to_dbm)
from .link import LinkReport, optimize_uniform_launch_power, simulate_link
from .quadrature import QuadratureSpec
from .registry import lookup_model, registered_models

SCENARIO_KINDS = ("c_band_48", "cl_band_96", "random_60")
C_BAND = (191.4, 196.1)
L_BAND = (186.1, 190.8)
RANDOM_COUNTS = {"C": 32, "L": 28}
CSV_HEADER = ("span", "channel", "freq_thz", "signal_dbm", "ase_dbm", "nli_dbm", "gsnr_db")
COMPARISON_HEADER = ("span", "channel", "freq_thz", "gsnr_a_db", "gsnr_b_db", "abs_err_db")
OPTIMIZE = "optimize"
_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


# -- deterministic selection --------------------------------------------------

def splitmix64(seed: int):
    """Generator of 64-bit outputs (Steele, Lea, Flood mixing constants)."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def fisher_yates(items, rng) -> list:
    """In-order copy of ``items`` shuffled by Durstenfeld's variant.

    Index ``j`` for position ``i`` is ``next(rng) % (i + 1)``; the modulo bias
    is below 2^-50 for any realistic slot count.
    """
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = next(rng) % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


# -- configuration model ------------------------------------------------------

@dataclass(frozen=True)
class BandSpec:
    name: str
    start_thz: float
    stop_thz: float
    power: object = OPTIMIZE  # dBm float or "optimize"
    select: Optional[int] = None  # number of slots drawn at random; None = all

    def slots_thz(self, spacing_ghz: float) -> list[float]:
        n = int(round((self.stop_thz - self.start_thz) * 1e3 / spacing_ghz))
        if n < 0 or not math.isclose(self.start_thz + n * spacing_ghz * 1e-3, self.stop_thz,
                                     abs_tol=1e-9):
            raise ConfigError(f"band {self.name}: {self.start_thz}-{self.stop_thz} THz is not "
                              f"a whole number of {spacing_ghz} GHz steps")
        # round to the grid in GHz so that slot frequencies are exact decimals
        return [round(self.start_thz * 1e3 + k * spacing_ghz, 6) / 1e3 for k in range(n + 1)]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    bands: tuple[BandSpec, ...]
    spacing_ghz: float = 100.0
    symbol_rate_gbd: float = 64.0
    spans: int = 10
    wss_after: tuple[int, ...] = (5,)
    gain_db: float = 20.5
    nf_db: float = 4.5
    lumped_loss_db: float = 0.5
    coherence_epsilon: float = 0.0
    fiber: dict = field(default_factory=dict)
    models: tuple[str, ...] = ("closed_form",)
    quadrature: QuadratureSpec = QuadratureSpec()
    workers: int = 1
    output_dir: str = "out"
    rng_seed: int = 0

    def __post_init__(self):
        if not self.bands:
            raise ConfigError("at least one band is required")
        if len({b.name for b in self.bands}) != len(self.bands):
            raise ConfigError("band names must be unique")
        if self.spans < 1:
            raise ConfigError("spans must be >= 1")
        if any(not 1 <= w <= self.spans for w in self.wss_after):
            raise ConfigError("wss_after positions must lie in 1..spans")
        if not 0 < self.symbol_rate_gbd <= self.spacing_ghz:
            raise ConfigError("symbol rate must be positive and fit within the channel spacing")
        if not self.models:
            raise ConfigError("at least one model is required")
        for m in self.models:
            if m not in registered_models():
                raise ConfigError(f"unknown model {m!r}; registered: {', '.join(registered_models())}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("duplicate model names")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.rng_seed <= _MASK64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")
        try:
            self.fiber_params()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"fiber: {exc}") from exc

    def fiber_params(self) -> FiberParams:
        return FiberParams.from_engineering(**self.fiber)

    def span_configs(self) -> tuple[SpanConfig, ...]:
        fib = self.fiber_params()
        return tuple(SpanConfig(fib, self.gain_db, self.nf_db, self.lumped_loss_db,
                                wss=(n in self.wss_after))
                     for n in range(1, self.spans + 1))

    def link_config(self) -> LinkConfig:
        return LinkConfig(self.span_configs(), self.coherence_epsilon)

    def selected_slots(self) -> list[tuple[int, float, str]]:
        """(global slot index, frequency THz, band name), ascending in frequency.

        Slots of all bands are numbered together in ascending frequency.  One
        splitmix64 stream seeded with ``rng_seed`` shuffles each band's slots
        in config order; a band with ``select = n`` keeps the first ``n``.
        """
        per_band = {b.name: b.slots_thz(self.spacing_ghz) for b in self.bands}
        everything = sorted((f, b) for b, fs in per_band.items() for f in fs)
        if len({f for f, _ in everything}) != len(everything):
            raise ConfigError("bands overlap")
        slot_id = {(f, b): n for n, (f, b) in enumerate(everything)}
        rng = splitmix64(self.rng_seed)
        keep = set()
        for band in self.bands:
            fs = per_band[band.name]
            if band.select is None:
                keep.update((f, band.name) for f in fs)
                continue
            if not 0 < band.select <= len(fs):
                raise ConfigError(f"band {band.name}: select must lie in 1..{len(fs)}")
            keep.update((f, band.name) for f in fisher_yates(fs, rng)[:band.select])
        return [(slot_id[k], k[0], k[1]) for k in everything if k in keep]

    def band_ranges_hz(self):
        return [(b.start_thz * 1e12 - 1.0, b.stop_thz * 1e12 + 1.0) for b in self.bands]

    def base_plan(self, powers_dbm: dict | None = None) -> ChannelPlan:
        """Channel plan with the configured powers (``optimize`` bands at 0 dBm
        unless ``powers_dbm`` supplies them)."""
        slots = self.selected_slots()
        levels = {b.name: (0.0 if b.power == OPTIMIZE else float(b.power)) for b in self.bands}
        levels.update(powers_dbm or {})
        freqs = [f * 1e12 for _, f, _ in slots]
        powers = [dbm_to_watt(levels[b]) for _, _, b in slots]
        return ChannelPlan.from_absolute(freqs, np.full(len(slots), self.symbol_rate_gbd * 1e9),
                                         powers, indices=[n for n, _, _ in slots])

    def resolve_launch_powers(self) -> dict[str, float]:
        """Per-band launch power in dBm; ``optimize`` bands use the closed-form model."""
        fixed = {b.name: float(b.power) for b in self.bands if b.power != OPTIMIZE}
        if len(fixed) == len(self.bands):
            return fixed
        plan = self.base_plan()
        ranges = self.band_ranges_hz()
        levels = optimize_uniform_launch_power(
            plan, self.span_configs()[0], lookup_model("closed_form"), ranges,
            fixed_dbm={n: float(b.power) for n, b in enumerate(self.bands) if b.power != OPTIMIZE})
        return {b.name: levels[n] for n, b in enumerate(self.bands)}

    def plan(self) -> ChannelPlan:
        return self.base_plan(self.resolve_launch_powers())


def generate_scenario(kind: str, seed: int = 0, **overrides) -> ScenarioConfig:
    """Config for one of the three reference experiments.

    All share 100 GHz spacing, 64 GBd channels, default SSMF, ten 100 km
    spans with a WSS after the fifth, 20.5 dB gain and 4.5 dB noise figure,
    and per-band optimised launch power.
    """
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; choose from {', '.join(SCENARIO_KINDS)}")
    c = BandSpec("C", *C_BAND)
    l = BandSpec("L", *L_BAND)
    if kind == "c_band_48":
        bands = (c,)
    elif kind == "cl_band_96":
        bands = (c, l)
    else:
        bands = (replace(c, select=RANDOM_COUNTS["C"]), replace(l, select=RANDOM_COUNTS["L"]))
    return ScenarioConfig(name=kind, bands=bands, rng_seed=seed, **overrides)


# -- config text ---------------------------------------------------------------

FIBER_KEYS = ("alpha_db_km", "alpha_bar_db_km", "beta2_ps2_km", "beta3_ps3_km",
              "gamma_per_w_km", "cr_per_w_km_thz", "length_km")
QUAD_KEYS = ("zeta_points", "f_grid_points", "grid_strategy", "rel_tol", "adaptive",
             "max_f_grid_points", "zeta_rule", "workers")
CONFIG_GRAMMAR = {
    "scenario": ("name", "rng_seed"),
    "plan": ("bands", "spacing_ghz", "symbol_rate_gbd"),
    "band.<name>": ("start_thz", "stop_thz", "power_dbm", "select"),
    "link": ("spans", "wss_after", "gain_db", "nf_db", "lumped_loss_db", "coherence_epsilon"),
    "fiber": FIBER_KEYS,
    "models": ("names",),
    "quadrature": QUAD_KEYS,
    "output": ("directory",),
}
_REQUIRED = {"scenario": ("name",), "plan": ("bands",), "band.<name>": ("start_thz", "stop_thz")}


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _number(section, key, text, kind=float):
    try:
        if kind is int:
            return int(text, 0)
        return float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {text!r}") from None


def _bool(section, key, text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {text!r}")


def parse_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#",), strict=True,
                                   default_section="__no_defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None

    for sec in cp.sections():
        grammar_key = "band.<name>" if sec.startswith("band.") else sec
        if grammar_key not in CONFIG_GRAMMAR:
            raise ConfigError(f"unknown section [{sec}]")
        allowed = CONFIG_GRAMMAR[grammar_key]
        for key in cp[sec]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
        for key in _REQUIRED.get(grammar_key, ()):
            if key not in cp[sec]:
                raise ConfigError(f"[{sec}] is missing required key {key!r}")
    for sec in ("scenario", "plan"):
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")

    sc, pl = cp["scenario"], cp["plan"]
    kw = {"name": sc["name"]}
    if "rng_seed" in sc:
        kw["rng_seed"] = _number("scenario", "rng_seed", sc["rng_seed"], int)
    if "spacing_ghz" in pl:
        kw["spacing_ghz"] = _number("plan", "spacing_ghz", pl["spacing_ghz"])
    if "symbol_rate_gbd" in pl:
        kw["symbol_rate_gbd"] = _number("plan", "symbol_rate_gbd", pl["symbol_rate_gbd"])

    bands = []
    names = _split_list(pl["bands"])
    declared = {s[5:] for s in cp.sections() if s.startswith("band.")}
    if set(names) != declared:
        raise ConfigError(f"[plan] bands {names} do not match the [band.*] sections {sorted(declared)}")
    for name in names:
        sec = cp[f"band.{name}"]
        power = sec.get("power_dbm", OPTIMIZE)
        if power.strip().lower() != OPTIMIZE:
            power = _number(f"band.{name}", "power_dbm", power)
        else:
            power = OPTIMIZE
        select = sec.get("select", "all")
        select = None if select.strip().lower() == "all" else _number(f"band.{name}", "select", select, int)
        bands.append(BandSpec(name, _number(f"band.{name}", "start_thz", sec["start_thz"]),
                              _number(f"band.{name}", "stop_thz", sec["stop_thz"]), power, select))
    kw["bands"] = tuple(bands)

    if "link" in cp:
        lk = cp["link"]
        if "spans" in lk:
            kw["spans"] = _number("link", "spans", lk["spans"], int)
        if "wss_after" in lk:
            raw = lk["wss_after"].strip().lower()
            kw["wss_after"] = () if raw == "none" else tuple(
                _number("link", "wss_after", t, int) for t in _split_list(raw))
        for key in ("gain_db", "nf_db", "lumped_loss_db", "coherence_epsilon"):
            if key in lk:
                kw[key] = _number("link", key, lk[key])
    if "fiber" in cp:
        kw["fiber"] = {k: _number("fiber", k, v) for k, v in cp["fiber"].items()}
    if "models" in cp:
        kw["models"] = tuple(_split_list(cp["models"].get("names", "")))
    if "quadrature" in cp:
        q = cp["quadrature"]
        qkw = {}
        for key in ("zeta_points", "f_grid_points", "max_f_grid_points"):
            if key in q:
                qkw[key] = _number("quadrature", key, q[key], int)
        if "rel_tol" in q:
            qkw["rel_tol"] = _number("quadrature", "rel_tol", q["rel_tol"])
        if "adaptive" in q:
            qkw["adaptive"] = _bool("quadrature", "adaptive", q["adaptive"])
        for key in ("grid_strategy", "zeta_rule"):
            if key in q:
                qkw[key] = q[key].strip()
        try:
            kw["quadrature"] = QuadratureSpec(**qkw)
        except ValueError as exc:
            raise ConfigError(f"[quadrature] {exc}") from None
        if "workers" in q:
            kw["workers"] = _number("quadrature", "workers", q["workers"], int)
    if "output" in cp and "directory" in cp["output"]:
        kw["output_dir"] = cp["output"]["directory"].strip()
    try:
        return ScenarioConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def format_config(cfg: ScenarioConfig) -> str:
    """Config text that :func:`parse_config` reads back to ``cfg``."""
    q = cfg.quadrature
    lines = ["[scenario]", f"name = {cfg.name}", f"rng_seed = {cfg.rng_seed}", "",
             "[plan]", f"bands = {', '.join(b.name for b in cfg.bands)}",
             f"spacing_ghz = {cfg.spacing_ghz!r}", f"symbol_rate_gbd = {cfg.symbol_rate_gbd!r}", ""]
    for b in cfg.bands:
        lines += [f"[band.{b.name}]", f"start_thz = {b.start_thz!r}", f"stop_thz = {b.stop_thz!r}",
                  f"power_dbm = {b.power if b.power == OPTIMIZE else repr(float(b.power))}",
                  f"select = {'all' if b.select is None else b.select}", ""]
    wss = ", ".join(str(w) for w in cfg.wss_after) or "none"
    lines += ["[link]", f"spans = {cfg.spans}", f"wss_after = {wss}", f"gain_db = {cfg.gain_db!r}",
              f"nf_db = {cfg.nf_db!r}", f"lumped_loss_db = {cfg.lumped_loss_db!r}",
              f"coherence_epsilon = {cfg.coherence_epsilon!r}", ""]
    if cfg.fiber:
        lines += ["[fiber]"] + [f"{k} = {v!r}" for k, v in cfg.fiber.items()] + [""]
    lines += ["[models]", f"names = {', '.join(cfg.models)}", "",
              "[quadrature]", f"zeta_points = {q.zeta_points}", f"f_grid_points = {q.f_grid_points}",
              f"grid_strategy = {q.grid_strategy}", f"rel_tol = {q.rel_tol!r}",
              f"adaptive = {str(q.adaptive).lower()}", f"max_f_grid_points = {q.max_f_grid_points}",
              f"zeta_rule = {q.zeta_rule}", f"workers = {cfg.workers}", "",
              "[output]", f"directory = {cfg.output_dir}", ""]
    return "\n".join(lines)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- CSV -----------------------------------------------------------------------

def fmt6(x: float) -> str:
    """Six significant digits, positional notation, trailing zeros kept."""
    if not math.isfinite(x):
        raise ValueError(f"cannot format non-finite value {x}")
    x = float(x) + 0.0
    # the exponent after rounding to six digits decides the number of decimals
    exp = int(f"{x:.5e}".split("e")[1]) if x != 0.0 else 0
    if exp > 5:
        x = round(x, 5 - exp)
    text = f"{x:.{max(5 - exp, 0)}f}"
    return text[1:] if text.startswith("-") and float(text) == 0.0 else text


def _dbm(p: float) -> str:
    return fmt6(watt_to_dbm(p)) if p > 0 else "-inf"


def report_rows(report: LinkReport):
    for n, span in enumerate(report.per_span, start=1):
        for rec in span:
            yield (str(n), str(rec.channel_index), fmt6(rec.freq / 1e12), _dbm(rec.signal_power),
                   _dbm(rec.ase_power), _dbm(rec.nli_power), fmt6(rec.gsnr_db))


def report_csv(report: LinkReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(report_rows(report))
    return buf.getvalue()


@dataclass(frozen=True)
class GsnrTable:
    """GSNR grid read back from a report CSV (spans x channels)."""

    channels: tuple[int, ...]
    freqs_thz: tuple[float, ...]
    gsnr_db: np.ndarray

    @classmethod
    def from_report(cls, report: LinkReport):
        first = report.per_span[0]
        return cls(tuple(r.channel_index for r in first), tuple(r.freq / 1e12 for r in first),
                   report.gsnr_matrix())

    @classmethod
    def from_csv(cls, text: str):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise ValueError("not a report CSV (header mismatch)")
        body = rows[1:]
        spans = sorted({int(r[0]) for r in body})
        chans = []
        freqs = []
        for r in body:
            if int(r[0]) == spans[0]:
                chans.append(int(r[1]))
                freqs.append(float(r[2]))
        grid = np.full((len(spans), len(chans)), np.nan)
        pos = {c: k for k, c in enumerate(chans)}
        for r in body:
            try:
                grid[spans.index(int(r[0])), pos[int(r[1])]] = float(r[6])
            except KeyError:
                raise ValueError(f"channel {r[1]} in span {r[0]} is missing from span {spans[0]}") from None
        if np.isnan(grid).any():
            raise ValueError("report CSV is not a complete spans x channels grid")
        return cls(tuple(chans), tuple(freqs), grid)


# -- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonMetrics:
    mae_db: float
    max_ae_db: float
    per_channel_abs_err: tuple[tuple[float, ...], ...]  # [span][channel]
    worst_channel_index: int
    worst_span_index: int  # 1-based, as in the CSV

    def __post_init__(self):
        if not (0 <= self.mae_db <= self.max_ae_db + 1e-15):
            raise ValueError("metrics must satisfy 0 <= MAE <= MaxAE")


def _as_table(report) -> GsnrTable:
    return report if isinstance(report, GsnrTable) else GsnrTable.from_report(report)


def compare(report_a, report_b) -> ComparisonMetrics:
    """MAE and MaxAE of |GSNR_a - GSNR_b| over all (span, channel) entries."""
    a, b = _as_table(report_a), _as_table(report_b)
    if a.gsnr_db.shape != b.gsnr_db.shape or a.channels != b.channels:
        raise ValueError(f"report shapes differ: {a.gsnr_db.shape} vs {b.gsnr_db.shape}")
    err = np.abs(a.gsnr_db - b.gsnr_db)
    span, chan = np.unravel_index(int(np.argmax(err)), err.shape)
    return ComparisonMetrics(float(np.mean(err)), float(np.max(err)),
                             tuple(tuple(float(v) for v in row) for row in err),
                             a.channels[chan], int(span) + 1)


def comparison_csv(report_a, report_b) -> str:
    a, b = _as_table(report_a), _as_table(report_b)
    compare(a, b)  # shape check
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_HEADER)
    for s in range(a.gsnr_db.shape[0]):
        for k, ch in enumerate(a.channels):
            ga, gb = a.gsnr_db[s, k], b.gsnr_db[s, k]
            w.writerow((str(s + 1), str(ch), fmt6(a.freqs_thz[k]), fmt6(ga), fmt6(gb), fmt6(abs(ga - gb))))
    return buf.getvalue()


# -- execution -----------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    reports: dict
    metrics: dict  # (model_a, model_b) -> ComparisonMetrics
    files: tuple[Path, ...]
    launch_dbm: dict
    warnings: tuple[str, ...]


def run(cfg: ScenarioConfig, output_dir=None, write: bool = True) -> RunResult:
    """Run every model and write one CSV per model plus a comparison CSV of each
    later model against the first (``<name>_comparison.csv`` for a model pair)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        launch = cfg.resolve_launch_powers()
        plan = cfg.base_plan(launch)
        link = cfg.link_config()
        reports = {}
        for name in cfg.models:
            model = lookup_model(name).with_options(quad=cfg.quadrature, workers=cfg.workers)
            reports[name] = simulate_link(link, plan, model)
    messages = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in messages:
            messages.append(text)
    metrics = {}
    ref = cfg.models[0]
    for other in cfg.models[1:]:
        metrics[(ref, other)] = compare(reports[ref], reports[other])
    files = []
    if write:
        out = Path(output_dir if output_dir is not None else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, rep in reports.items():
            path = out / f"{cfg.name}_{name}.csv"
            path.write_text(report_csv(rep), encoding="utf-8", newline="")
            files.append(path)
        for other in cfg.models[1:]:
            suffix = "" if len(cfg.models) == 2 else f"_{other}"
            path = out / f"{cfg.name}_comparison{suffix}.csv"
            path.write_text(comparison_csv(reports[ref], reports[other]), encoding="utf-8", newline="")
            files.append(path)
    return RunResult(reports, metrics, tuple(files), launch, tuple(messages))
