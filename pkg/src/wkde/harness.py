"""Seeded Monte Carlo runner, theory comparison and CSV output.

Streams: replication ``r`` at sample size ``n`` draws from
``PCG64(SeedSequence(entropy=seed, spawn_key=(n, r)))``.  The spawn key is
a pure function of the counter pair, so every replication owns a distinct
stream no matter how work is split across processes, and results are
reduced in (n, r) order.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .bandwidths import BandSequence, NormingSequence
from .conditions import RegimePrediction, classify_regime, tail_condition_trace
from .densities import DensityModel, WeightSpec, log_weight_tail, make_density
from .estimator import (
    DEFAULT_STENCIL,
    DeviationStatistic,
    QuadratureError,
    Sample,
    large_norming_deviation,
    weighted_sup_deviation,
)
from .kernels import KernelSpec, kernel

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Row",
    "Summary",
    "ExperimentResult",
    "TheoryReport",
    "load_config",
    "parse_config",
    "config_to_text",
    "replication_stream",
    "run_replication",
    "run_experiment",
    "summarize",
    "exact_max_term_cdf",
    "compare_to_theory",
    "emit",
    "load_result",
    "reference_tail_verdict",
    "run_sweep",
    "predict",
]

MODES = ("classical", "large", "max_term_only")
QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
WORKERS_ENV = "WKDE_WORKERS"
ROW_HEADER = ("n", "rep", "T", "M", "central", "residual", "argmax", "seed_hi", "seed_lo")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class ExperimentConfig:
    model_family: str
    model_params: tuple = ()
    kernel_family: str = "boxcar"
    kernel_dimension: int = 1
    band: BandSequence = field(default_factory=lambda: BandSequence.power(0.4))
    norming: NormingSequence | None = None
    beta: float = 0.25
    weight_scale: float = 1.0
    n_schedule: tuple = (1000,)
    replications: int = 1
    seed: int = 0
    core: object = None
    stencil: int = DEFAULT_STENCIL
    output: str = "out"
    mode: str = "classical"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        ns = tuple(int(n) for n in self.n_schedule)
        if not ns:
            raise ConfigError("n-schedule is empty")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n-schedule must be strictly increasing")
        if ns[0] < 2:
            raise ConfigError("sample sizes must be at least 2")
        object.__setattr__(self, "n_schedule", ns)
        if int(self.replications) < 1:
            raise ConfigError("replications must be >= 1")
        if int(self.stencil) < 1:
            raise ConfigError("stencil must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.mode == "large" and self.norming is None:
            raise ConfigError("mode = large needs a [norming] section")
        try:
            self.model()
            self.kernel()
            self.weight()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.kernel_dimension != 1 or self.band.d != 1:
            raise ConfigError("simulation supports d = 1 only")

    def model(self) -> DensityModel:
        return make_density(self.model_family, **dict(self.model_params))

    def kernel(self) -> KernelSpec:
        return kernel(self.kernel_family, self.kernel_dimension)

    def weight(self) -> WeightSpec:
        return WeightSpec(self.beta, self.weight_scale)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.replace(";", ",").split(",") if v.strip()]


def parse_config(text: str) -> ExperimentConfig:
    """Build a config from ``key = value`` text with bracketed sections."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for sec in ("model", "weight", "experiment"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")
    try:
        model = dict(cp["model"])
        family = model.pop("family")
        params = tuple(sorted((k, float(v)) for k, v in model.items()))

        ksec = cp["kernel"] if cp.has_section("kernel") else {}
        beta = float(cp["weight"]["beta"])
        wscale = float(cp["weight"].get("scale", "1"))

        bsec = cp["bandwidth"] if cp.has_section("bandwidth") else {"form": "power", "alpha": "0.4"}
        form = bsec.get("form", "power")
        if form == "critical_log":
            band = BandSequence.critical_log(float(bsec.get("beta", beta)))
        elif form == "power_log":
            band = BandSequence.power_log(float(bsec["alpha"]), float(bsec.get("p", "0")),
                                          int(bsec.get("d", "1")))
        else:
            band = BandSequence(form, float(bsec["alpha"]), int(bsec.get("d", "1")))

        norming = None
        if cp.has_section("norming"):
            nsec = cp["norming"]
            norming = NormingSequence(float(nsec["exponent"]),
                                      float(nsec.get("log_power", "0")),
                                      float(nsec.get("scale", "1")))

        esec = cp["experiment"]
        core_txt = esec.get("core", "auto").strip()
        if core_txt == "auto":
            core = None
        else:
            vals = _floats(core_txt)
            core = vals[0] if len(vals) == 1 else tuple(vals[:2])
        return ExperimentConfig(
            model_family=family,
            model_params=params,
            kernel_family=ksec.get("family", "boxcar"),
            kernel_dimension=int(ksec.get("dimension", "1")),
            band=band,
            norming=norming,
            beta=beta,
            weight_scale=wscale,
            n_schedule=tuple(_ints(esec["n"])),
            replications=int(esec.get("replications", "1")),
            seed=int(esec.get("seed", "0")),
            core=core,
            stencil=int(esec.get("stencil", str(DEFAULT_STENCIL))),
            output=esec.get("output", "out"),
            mode=esec.get("mode", "classical"),
        )
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialize a config in the same format ``parse_config`` reads."""
    lines = ["[model]", f"family = {cfg.model_family}"]
    lines += [f"{k} = {_fmt(v)}" for k, v in cfg.model_params]
    lines += ["", "[kernel]", f"family = {cfg.kernel_family}",
              f"dimension = {cfg.kernel_dimension}"]
    b = cfg.band
    lines += ["", "[bandwidth]", f"form = {b.form}"]
    if b.form == "critical_log":
        lines.append(f"beta = {_fmt(b.beta)}")
    else:
        lines += [f"alpha = {_fmt(b.alpha)}", f"d = {b.d}"]
        if b.form == "power_log":
            lines.append(f"p = {_fmt(b.p)}")
    if cfg.norming is not None:
        d = cfg.norming
        lines += ["", "[norming]", f"exponent = {_fmt(d.exponent)}",
                  f"log_power = {_fmt(d.log_power)}", f"scale = {_fmt(d.scale)}"]
    lines += ["", "[weight]", f"beta = {_fmt(cfg.beta)}", f"scale = {_fmt(cfg.weight_scale)}"]
    if cfg.core is None:
        core = "auto"
    elif np.ndim(cfg.core) == 0:
        core = _fmt(cfg.core)
    else:
        core = ", ".join(_fmt(v) for v in cfg.core)
    lines += ["", "[experiment]", f"mode = {cfg.mode}",
              "n = " + ", ".join(str(n) for n in cfg.n_schedule),
              f"replications = {cfg.replications}", f"seed = {cfg.seed}",
              f"core = {core}", f"stencil = {cfg.stencil}", f"output = {cfg.output}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# running

@dataclass(frozen=True)
class Row:
    n: int
    rep: int
    T: float
    M: float
    central: float
    residual: float
    argmax: float
    seed_hi: int
    seed_lo: int
    error: str = ""


def replication_stream(seed: int, n: int, r: int) -> tuple[np.random.Generator, int, int]:
    """Generator for replication ``r`` at size ``n`` plus two 32-bit stream words."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(n, r))
    hi, lo = (int(v) for v in ss.generate_state(2, np.uint32))
    return np.random.Generator(np.random.PCG64(ss)), hi, lo


def _max_term_only(s: Sample, m, k, w, cfg: ExperimentConfig) -> DeviationStatistic:
    # max_i Psi(X_i) / d_n with d_n = n^beta unless a norming is configured
    log_psi = np.asarray(w.log_psi(m, s.points))
    i = int(np.argmax(log_psi))
    log_max = float(log_psi[i])
    if cfg.norming is not None:
        log_d = float(cfg.norming.log_value(max(s.n, 2)))
    else:
        log_d = cfg.beta * math.log(s.n)
    t = math.exp(log_max - log_d)
    return DeviationStatistic(s.n, t, float(s.points[i]), t, math.nan)


def run_replication(cfg: ExperimentConfig, n: int, r: int) -> Row:
    rng, hi, lo = replication_stream(cfg.seed, n, r)
    m, k, w = cfg.model(), cfg.kernel(), cfg.weight()
    s = Sample(m.sample(rng, n), seed_lineage=(cfg.seed, n, r))
    try:
        if cfg.mode == "classical":
            st = weighted_sup_deviation(s, m, k, cfg.band, w, cfg.core, cfg.stencil)
        elif cfg.mode == "large":
            st = large_norming_deviation(s, m, k, cfg.band, w, cfg.norming, cfg.core, cfg.stencil)
        else:
            st = _max_term_only(s, m, k, w, cfg)
    except QuadratureError as exc:
        nan = math.nan
        return Row(n, r, nan, nan, nan, nan, nan, hi, lo, error=str(exc) or "quadrature")
    return Row(n, r, st.statistic, st.max_term, st.central_constant, st.residual,
               st.argmax_t, hi, lo)


def _run_chunk(args) -> list[Row]:
    cfg, tasks = args
    return [run_replication(cfg, n, r) for n, r in tasks]


def _worker_count(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


@dataclass(frozen=True)
class Summary:
    n: int
    count: int
    failed: int
    T: tuple
    M: tuple
    residual: tuple


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    summaries: list
    theory: "TheoryReport | None" = None

    def rows_for(self, n: int) -> list[Row]:
        return [row for row in self.rows if row.n == n]

    def values(self, n: int, attr: str = "T") -> np.ndarray:
        vals = np.array([getattr(row, attr) for row in self.rows_for(n) if not row.error])
        return vals

    @property
    def failures(self) -> dict:
        return {s.n: s.failed for s in self.summaries}


def _quantiles(x: np.ndarray) -> tuple:
    if x.size == 0:
        return tuple(math.nan for _ in QUANTILE_LEVELS)
    return tuple(float(v) for v in np.quantile(x, QUANTILE_LEVELS))


def summarize(rows: list[Row], n_schedule) -> list[Summary]:
    """Per-n quantiles of T, M and residual; failed rows are counted, not used."""
    out = []
    for n in n_schedule:
        sel = [row for row in rows if row.n == n]
        ok = [row for row in sel if not row.error]
        col = lambda a: np.array([getattr(row, a) for row in ok], dtype=float)
        out.append(Summary(int(n), len(ok), len(sel) - len(ok),
                           _quantiles(col("T")), _quantiles(col("M")),
                           _quantiles(col("residual"))))
    return out


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every (n, r) replication; output is independent of ``workers``."""
    tasks = [(n, r) for n in cfg.n_schedule for r in range(cfg.replications)]
    nw = _worker_count(workers)
    if nw == 1 or len(tasks) == 1:
        rows = _run_chunk((cfg, tasks))
    else:
        size = max(1, math.ceil(len(tasks) / (4 * nw)))
        chunks = [(cfg, tasks[i:i + size]) for i in range(0, len(tasks), size)]
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = [row for part in pool.map(_run_chunk, chunks) for row in part]
    return ExperimentResult(cfg, rows, summarize(rows, cfg.n_schedule))


# ---------------------------------------------------------------------------
# theory comparison

def exact_max_term_cdf(m: DensityModel, w: WeightSpec, n: int, x, log_norm: float):
    """Pr{max_i Psi(X_i) / exp(log_norm) <= x}, exact for i.i.d. samples of size n."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        lp = np.asarray(log_weight_tail(m, w, x[pos] * math.exp(log_norm)), dtype=float)
        p = np.exp(lp)
        with np.errstate(divide="ignore"):
            out[pos] = np.where(p >= 1.0, 0.0, np.exp(n * np.log1p(-np.minimum(p, 1.0))))
    return float(out) if out.ndim == 0 else out


@dataclass
class TheoryReport:
    n: tuple
    median_T: tuple
    median_abs_residual: tuple
    residual_decreasing: bool
    constant: float | None = None
    rel_deviation: tuple | None = None
    deviation_decreasing: bool | None = None
    ks: tuple | None = None
    ks_decreasing: bool | None = None
    median_ratio: float = math.nan

    def columns(self) -> dict:
        """Per-n columns for summary.csv."""
        cols = {"median_T": self.median_T, "median_abs_residual": self.median_abs_residual}
        if self.rel_deviation is not None:
            cols["rel_deviation"] = self.rel_deviation
        if self.ks is not None:
            cols["ks"] = self.ks
        return cols


def _decreasing(v) -> bool:
    v = [x for x in v if not math.isnan(x)]
    return len(v) >= 2 and all(b < a for a, b in zip(v, v[1:]))


def compare_to_theory(res: ExperimentResult, pred: RegimePrediction | None = None) -> TheoryReport:
    """Measure finite-n agreement with a predicted constant or limit law.

    In ``max_term_only`` mode the reference is the exact finite-n law of the
    normalized sample maximum and ``pred`` is not needed.
    """
    cfg = res.config
    ns = cfg.n_schedule
    med = tuple(float(np.median(res.values(n))) if res.values(n).size else math.nan for n in ns)
    mres = tuple(float(np.median(np.abs(res.values(n, "residual")))) if res.values(n).size
                 else math.nan for n in ns)
    rep = TheoryReport(ns, med, mres, _decreasing(mres))
    if med[0] > 0:
        rep.median_ratio = med[-1] / med[0]

    if cfg.mode == "max_term_only":
        m, w = cfg.model(), cfg.weight()
        ks = []
        for n in ns:
            log_d = float(cfg.norming.log_value(n)) if cfg.norming else cfg.beta * math.log(n)
            ks.append(float(stats.kstest(res.values(n),
                                         lambda x: exact_max_term_cdf(m, w, n, x, log_d)).statistic))
        rep.ks, rep.ks_decreasing = tuple(ks), _decreasing(ks)
        return rep
    if pred is None:
        return rep
    if pred.limit_law is not None:
        law = pred.limit_law
        ks = tuple(float(stats.kstest(res.values(n), law.cdf).statistic) for n in ns)
        rep.ks, rep.ks_decreasing = ks, _decreasing(ks)
    if pred.limit_constant is not None and pred.limit_law is None:
        c = float(pred.limit_constant)
        rep.constant = c
        if c != 0.0:
            dev = tuple(abs(x - c) / c for x in med)
        else:
            dev = tuple(abs(x) for x in med)
        rep.rel_deviation, rep.deviation_decreasing = dev, _decreasing(dev)
    return rep


def predict(cfg: ExperimentConfig) -> RegimePrediction:
    return classify_regime(cfg.model(), cfg.weight(), cfg.band,
                           cfg.norming if cfg.mode == "large" else None, cfg.kernel())


# ---------------------------------------------------------------------------
# files

def _summary_header(theory: TheoryReport | None) -> list[str]:
    head = ["n", "count", "failed"]
    for name in ("T", "M", "residual"):
        head += [f"{name}_q{int(round(100 * q)):02d}" for q in QUANTILE_LEVELS]
    if theory is not None:
        head += list(theory.columns())
    return head


def emit(res: ExperimentResult, path) -> dict:
    """Write rows.csv, summary.csv and config.txt under ``path``."""
    out = Path(path)
    files = {"rows": out / "rows.csv", "summary": out / "summary.csv",
             "config": out / "config.txt"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(files["rows"], "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(ROW_HEADER)
            for row in res.rows:
                wr.writerow([row.n, row.rep, _fmt(row.T), _fmt(row.M), _fmt(row.central),
                             _fmt(row.residual), _fmt(row.argmax), row.seed_hi, row.seed_lo])
        cols = res.theory.columns() if res.theory is not None else {}
        with open(files["summary"], "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(_summary_header(res.theory))
            for i, s in enumerate(res.summaries):
                line = [s.n, s.count, s.failed]
                line += [_fmt(v) for v in s.T + s.M + s.residual]
                line += [_fmt(v[i]) for v in cols.values()]
                wr.writerow(line)
        files["config"].write_text(config_to_text(res.config))
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return files


def load_result(path) -> tuple[list[Row], list[Summary]]:
    """Read rows.csv and summary.csv written by :func:`emit`."""
    out = Path(path)
    rows = []
    with open(out / "rows.csv", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(Row(int(rec["n"]), int(rec["rep"]), float(rec["T"]), float(rec["M"]),
                            float(rec["central"]), float(rec["residual"]),
                            float(rec["argmax"]), int(rec["seed_hi"]), int(rec["seed_lo"]),
                            "" if math.isfinite(float(rec["T"])) else "failed"))
    summaries = []
    k = len(QUANTILE_LEVELS)
    with open(out / "summary.csv", newline="") as fh:
        for rec in csv.reader(fh):
            if rec[0] == "n":
                continue
            vals = [float(v) for v in rec[3:3 + 3 * k]]
            summaries.append(Summary(int(rec[0]), int(rec[1]), int(rec[2]),
                                     tuple(vals[:k]), tuple(vals[k:2 * k]),
                                     tuple(vals[2 * k:])))
    return rows, summaries


# ---------------------------------------------------------------------------
# condition sweeps

def reference_tail_verdict(family: str, params: dict, alpha: float, beta: float) -> str | None:
    """Closed-form tightness verdict for power bandwidths h = n^-alpha.

    Known for exponential-type tails (exp_tail with r >= 1, normal,
    sym_exponential), polynomial tails and the density with an isolated
    zero; ``None`` elsewhere.
    """
    eps = 1e-12
    if family in ("sym_exponential", "normal") or (family == "exp_tail" and params.get("r", 1.0) >= 1.0):
        ok = 2.0 * beta <= 1.0 - alpha + eps
    elif family == "power_tail":
        r = params["r"]
        ok = beta <= (r - 1.0) * (1.0 - alpha) / (2.0 * r) + eps
    elif family == "zero_at_origin":
        s = params.get("s", 2.0)
        ok = beta <= (1.0 - alpha) / 2.0 * (1.0 + 1.0 / s) + eps
    else:
        return None
    return "bounded" if ok else "unbounded"


def run_sweep(family: str, param_grid: list[dict], alphas, betas) -> list[dict]:
    """Numeric tail-condition verdicts against the closed forms.

    Returns one dict per grid point with keys family, params, alpha, beta,
    numeric, reference and match.  The raw tail trace is used so that
    models outside the regularity class (the isolated zero) are scanned too.
    """
    out = []
    for params in param_grid:
        m = make_density(family, **params)
        for a in alphas:
            for b in betas:
                numeric = tail_condition_trace(m, WeightSpec(b), BandSequence.power(a)).verdict
                ref = reference_tail_verdict(family, params, a, b)
                out.append({"family": family, "params": dict(params), "alpha": a, "beta": b,
                            "numeric": numeric, "reference": ref,
                            "match": ref is None or numeric == ref})
    return out
