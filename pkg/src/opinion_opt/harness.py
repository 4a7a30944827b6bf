"""Experiment orchestration: synthetic inputs, sweeps, CSV reports."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .budgeted import apply_targets, baseline_score, baseline_top_opinion, exhaustive_opt, greedy_select
from .equilibrium import OpinionProfile, solve_equilibrium
from .graph import Graph, read_edge_list
from .unbudgeted import BoxBounds, maximize_unbudgeted, minimize_unbudgeted

POWERLAW_XMIN = 0.01
RESISTANCE_LOW = 0.001

UNBUDGETED_HEADER = ["dataset", "mode", "trial", "seed", "sum_s", "sum_z", "sum_z_opt", "iterations", "wall_time_ms"]
BUDGETED_HEADER = ["dataset", "method", "k", "trial", "seed", "objective", "wall_time_ms"]
MODES = ("equilibrium", "unbudgeted-min", "unbudgeted-max", "budgeted")
METHODS = ("none", "greedy", "baseline1", "baseline2", "exhaustive")


class ConfigError(ValueError):
    """Inconsistent experiment configuration."""


class ProfileParseError(ValueError):
    """Malformed opinion/resistance file."""


def gen_opinions(n: int, dist: str = "uniform", seed=0, slope: float = 2.0) -> np.ndarray:
    """Draw ``n`` innate opinions.

    ``uniform`` is U[0, 1]. ``powerlaw`` samples the density proportional to
    ``x**-slope`` on ``[POWERLAW_XMIN, 1]`` by inverting its CDF.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        return rng.random(n)
    if dist == "powerlaw":
        if slope <= 1:
            raise ValueError(f"power-law slope must exceed 1, got {slope}")
        u = rng.random(n)
        a = 1.0 - slope
        lo = POWERLAW_XMIN ** a
        x = (lo - u * (lo - 1.0)) ** (1.0 / a)
        return np.clip(x, POWERLAW_XMIN, 1.0)
    raise ValueError(f"unknown opinion distribution {dist!r}")


def gen_resistance(n: int, seed=0) -> np.ndarray:
    """I.i.d. uniform resistances on ``[0.001, 1]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return RESISTANCE_LOW + (1.0 - RESISTANCE_LOW) * rng.random(n)


def read_profile_columns(path, n: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a ``node<TAB>s[<TAB>alpha]`` file.

    Every node in ``[0, n)`` must appear exactly once. Returns ``(s, alpha)``
    with ``alpha`` None when the file has only two columns.
    """
    rows: dict[int, list[float]] = {}
    width = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ProfileParseError(f"{path}:{line_no}: expected 2 or 3 fields, got {len(parts)}")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ProfileParseError(f"{path}:{line_no}: inconsistent column count")
            try:
                node = int(parts[0])
                vals = [float(v) for v in parts[1:]]
            except ValueError:
                raise ProfileParseError(f"{path}:{line_no}: cannot parse {raw.strip()!r}") from None
            if node in rows:
                raise ProfileParseError(f"{path}:{line_no}: node {node} listed twice")
            rows[node] = vals
    if len(rows) != n or set(rows) != set(range(n)):
        raise ConfigError(f"{path} describes {len(rows)} nodes but the graph has {n}")
    data = np.array([rows[i] for i in range(n)])
    return data[:, 0], (data[:, 1] if data.shape[1] == 2 else None)


def write_profile(path_or_buf, values, alpha=None):
    """Write ``node<TAB>value[<TAB>alpha]`` lines."""
    lines = []
    for i, v in enumerate(values):
        cols = [str(i), repr(float(v))]
        if alpha is not None:
            cols.append(repr(float(alpha[i])))
        lines.append("\t".join(cols) + "\n")
    if hasattr(path_or_buf, "write"):
        path_or_buf.writelines(lines)
    else:
        Path(path_or_buf).write_text("".join(lines), encoding="utf-8")


@dataclass
class ExperimentConfig:
    graph_path: str
    mode: str
    opinions: str = "gen"
    resistance: str | None = None
    dist: str = "uniform"
    slope: float = 2.0
    bounds: BoxBounds = field(default_factory=BoxBounds)
    methods: list[str] = field(default_factory=lambda: ["greedy"])
    budget_list: list[int] = field(default_factory=list)
    direction: str = "max"
    trials: int = 1
    seed: int = 0
    output_path: str | None = None
    normalize_signed: bool = False
    baseline_alpha: float = 1.0
    timing: bool = False

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if (self.mode == "budgeted") != bool(self.budget_list):
            raise ConfigError("a budget list is required for, and only for, budgeted mode")
        if any(k < 1 for k in self.budget_list):
            raise ConfigError("budgets must be positive")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}")

    @property
    def dataset(self) -> str:
        return Path(self.graph_path).stem


def trial_seed(seed: int, trial: int) -> int:
    return seed + trial


def build_profile(cfg: ExperimentConfig, g: Graph, trial: int) -> OpinionProfile:
    """Opinions and resistances for one trial (files are reused across trials).

    ``resistance=None`` takes the alpha column of the opinion file when it
    has one and generates values otherwise.
    """
    ts = trial_seed(cfg.seed, trial)
    file_alpha = None
    if cfg.opinions == "gen":
        s = gen_opinions(g.n, cfg.dist, [ts, 0], cfg.slope)
    else:
        s, file_alpha = read_profile_columns(cfg.opinions, g.n)
        if cfg.normalize_signed:
            s = (s + 1.0) / 2.0
    if cfg.resistance is None and file_alpha is not None:
        alpha = file_alpha
    elif cfg.resistance in (None, "gen"):
        alpha = gen_resistance(g.n, [ts, 1])
    else:
        first, second = read_profile_columns(cfg.resistance, g.n)
        alpha = second if second is not None else first
    try:
        return OpinionProfile(s, alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _ms(t0: float, timing: bool) -> str:
    return f"{(time.perf_counter() - t0) * 1000:.1f}" if timing else ""


def _fmt(x) -> str:
    return repr(float(x))


def _unbudgeted_rows(cfg, g, trial, p):
    t0 = time.perf_counter()
    base = solve_equilibrium(g, p)
    opt, iters = "", 0
    if cfg.mode == "unbudgeted-min":
        plan = minimize_unbudgeted(g, p.s, cfg.bounds, alpha=p.alpha)
        opt, iters = _fmt(plan.objective), plan.iterations
    elif cfg.mode == "unbudgeted-max":
        plan = maximize_unbudgeted(g, p.s, cfg.bounds, alpha=p.alpha)
        opt, iters = _fmt(plan.objective), plan.iterations
    return [[cfg.dataset, cfg.mode, trial, trial_seed(cfg.seed, trial), _fmt(p.s.sum()),
             _fmt(base.objective), opt, iters, _ms(t0, cfg.timing)]]


def _budgeted_rows(cfg, g, trial, p):
    rows = []
    ts = trial_seed(cfg.seed, trial)
    ks = sorted(set(cfg.budget_list))
    for method in cfg.methods:
        t0 = time.perf_counter()
        if method == "greedy":
            plan = greedy_select(g, p, cfg.bounds, max(ks), cfg.direction)
            for k in ks:
                obj = plan.history[min(k, g.n) - 1]
                rows.append([cfg.dataset, method, k, trial, ts, _fmt(obj), _ms(t0, cfg.timing)])
            continue
        for k in ks:
            t0 = time.perf_counter()
            kk = min(k, g.n)
            if method == "none":
                obj = solve_equilibrium(g, p).objective
            elif method == "baseline1":
                obj = apply_targets(g, p, baseline_top_opinion(p, kk), cfg.baseline_alpha).objective
            elif method == "baseline2":
                obj = apply_targets(g, p, baseline_score(g, p, kk), cfg.baseline_alpha).objective
            else:
                obj = exhaustive_opt(g, p, cfg.bounds, kk, cfg.direction).objective
            rows.append([cfg.dataset, method, k, trial, ts, _fmt(obj), _ms(t0, cfg.timing)])
    return rows


def _mean_rows(rows, header):
    """Append one averaged row per group; numeric columns are averaged over trials."""
    if not rows:
        return []
    if header is BUDGETED_HEADER:
        keyf = lambda r: (r[1], r[2])  # noqa: E731
        value_cols = [5]
    else:
        keyf = lambda r: (r[1],)  # noqa: E731
        value_cols = [4, 5, 6]
    groups: dict = {}
    for r in rows:
        groups.setdefault(keyf(r), []).append(r)
    out = []
    for key, rs in groups.items():
        if len(rs) < 2:
            continue
        m = list(rs[0])
        m[3 if header is BUDGETED_HEADER else 2] = "mean"
        m[4 if header is BUDGETED_HEADER else 3] = ""
        for c in value_cols:
            vals = [float(r[c]) for r in rs if r[c] != ""]
            m[c] = _fmt(np.mean(vals)) if vals else ""
        if header is not BUDGETED_HEADER:
            m[7] = ""
        m[-1] = ""
        out.append(m)
    return out


def _sort_key(header):
    def key(r):
        trial = r[3] if header is BUDGETED_HEADER else r[2]
        tkey = (1, 0) if trial == "mean" else (0, trial)
        if header is BUDGETED_HEADER:
            return (r[0], r[1], r[2], tkey)
        return (r[0], r[1], tkey)
    return key


def run_experiment(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    """Run every trial of ``cfg``; returns ``(header, rows)`` in canonical order.

    Rows are sorted by (dataset, method or mode, k, trial) with averaged rows
    (``trial == "mean"``) after the per-trial rows they summarize.
    """
    cfg.validate()
    g = read_edge_list(cfg.graph_path)
    header = BUDGETED_HEADER if cfg.mode == "budgeted" else UNBUDGETED_HEADER
    rows = []
    for trial in range(cfg.trials):
        p = build_profile(cfg, g, trial)
        if cfg.mode == "budgeted":
            rows.extend(_budgeted_rows(cfg, g, trial, p))
        else:
            rows.extend(_unbudgeted_rows(cfg, g, trial, p))
    rows.extend(_mean_rows(rows, header))
    rows.sort(key=_sort_key(header))
    if cfg.output_path:
        write_csv(cfg.output_path, header, rows)
    return header, rows


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(format_csv(header, rows), encoding="utf-8")
