"""Run configuration, trace serialization, and benchmark sweeps."""

from __future__ import annotations

import csv
import io
import json
import os
import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from .denoisers import FLIP_LAWS, NGramDenoiser, OracleDenoiser, ngram_fit
from .metrics import RunSummary, flip_rate_from_rows, speedup, summarize
from .scheduler import KINDS, SchedulerConfig, Trace, run
from .seq_core import DEFAULT_DELIMITERS, SequenceState, Tokenizer, load_corpus
from .snapping import SNAP_MODES, DelimiterSet, SnapConfig
from .stability import SizingBounds

OUT_DIR_ENV = "LSPSCHED_OUT_DIR"
CSV_COLUMNS = ("scheduler", "seed", "steps", "calls", "cost", "gather_events",
               "flip_rate", "speedup_vs_full", "exact_match")

_SCHED_RE = re.compile(r"^(\w+?)(?:[(:](\d+)\)?)?$")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def parse_scheduler(text: str, default_k: int = 1) -> tuple[str, int]:
    """``"fixed_prefix(8)"``, ``"fixed_prefix:8"`` or a bare kind name."""
    m = _SCHED_RE.match(text.strip())
    if not m or m.group(1) not in KINDS:
        raise ConfigError("scheduler", f"unknown scheduler {text!r}; expected one of {KINDS}")
    kind, k = m.group(1), m.group(2)
    if k is not None and kind != "fixed_prefix":
        raise ConfigError("scheduler", f"{kind} takes no size argument")
    return kind, int(k) if k is not None else default_k


def _encode_list(items) -> str:
    return " ".join(json.dumps(s)[1:-1] for s in items)


def _decode_list(text: str) -> tuple[str, ...]:
    return tuple(json.loads(f'"{s}"') for s in text.split())


@dataclass
class RunConfig:
    scheduler: str = "lsp"
    k: int = 1
    alpha: float = 0.25
    beta: float = 0.50
    tau_floor: float = 0.0
    lmin: int = 1
    w: int = 16
    snap_mode: str = "snap"
    gen_len: int = 128
    seed: int = 0
    denoiser: str = "oracle"
    mu: float = 6.0
    gamma: float = 0.97
    sigma: float = 1.0
    phi: float = 2.0
    flip_prob: float = 0.5
    flip_law: str = "logistic"
    ngram_order: int = 3
    ngram_k: float = 0.5
    ngram_lambda: float = 0.5
    corpus: str = ""
    prompt: str | None = None
    target_line: int = 1
    delimiters: tuple[str, ...] = DEFAULT_DELIMITERS
    gather_penalty: float = 0.0
    schedulers: tuple[str, ...] = ("lsp", "scattered_margin")
    seeds: tuple[int, ...] = tuple(range(20))
    out_dir: str = ""
    trace: str = ""
    summary: str = ""
    csv: str = ""
    jobs: int = 1

    def validate(self) -> "RunConfig":
        parse_scheduler(self.scheduler, self.k)
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha", f"must be in (0, 1], got {self.alpha}")
        if not self.alpha <= self.beta <= 1:
            raise ConfigError("beta", f"must be in [alpha, 1], got {self.beta}")
        if self.tau_floor < 0:
            raise ConfigError("tau-floor", f"must be >= 0, got {self.tau_floor}")
        if self.lmin < 1:
            raise ConfigError("lmin", f"must be >= 1, got {self.lmin}")
        if self.w < 0:
            raise ConfigError("w", f"must be >= 0, got {self.w}")
        if self.k < 1:
            raise ConfigError("k", f"must be >= 1, got {self.k}")
        if self.snap_mode not in SNAP_MODES:
            raise ConfigError("snap-mode", f"must be one of {SNAP_MODES}")
        if self.gen_len < 1:
            raise ConfigError("gen-len", f"must be >= 1, got {self.gen_len}")
        if self.denoiser not in ("oracle", "ngram"):
            raise ConfigError("denoiser", "must be 'oracle' or 'ngram'")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma", f"must be in (0, 1], got {self.gamma}")
        for name in ("mu", "sigma", "phi", "gather_penalty"):
            if getattr(self, name) < 0:
                raise ConfigError(name.replace("_", "-"), "must be >= 0")
        if not 0 <= self.flip_prob <= 1:
            raise ConfigError("flip-prob", f"must be in [0, 1], got {self.flip_prob}")
        if self.flip_law not in FLIP_LAWS:
            raise ConfigError("flip-law", f"must be one of {FLIP_LAWS}")
        if self.ngram_order < 1:
            raise ConfigError("ngram-order", "must be >= 1")
        if self.ngram_k <= 0:
            raise ConfigError("ngram-k", "must be > 0")
        if not 0 <= self.ngram_lambda <= 1:
            raise ConfigError("ngram-lambda", "must be in [0, 1]")
        if self.target_line < 0:
            raise ConfigError("target-line", "must be >= 0")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be >= 1")
        for s in self.schedulers:
            parse_scheduler(s, self.k)
        return self

    # -- flat key = value text ---------------------------------------------

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            key = f.name.replace("_", "-")
            if value is None:
                continue
            if isinstance(value, tuple):
                value = _encode_list(str(v) for v in value)
            elif isinstance(value, str):
                value = json.dumps(value)[1:-1]
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cfg = base or cls()
        known = {f.name: f for f in fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg.set(key, value, known)
        return cfg

    def set(self, key: str, value: str, known=None) -> None:
        known = known or {f.name: f for f in fields(self)}
        name = key.replace("-", "_")
        if name not in known:
            raise ConfigError(key, "unknown configuration key")
        current = getattr(type(self)(), name)
        try:
            if name == "seeds":
                parsed = tuple(int(s) for s in value.replace(",", " ").split())
            elif name == "schedulers":
                parsed = tuple(s for s in value.replace(",", " ").split())
            elif name == "delimiters":
                parsed = _decode_list(value)
            elif isinstance(current, bool):
                parsed = value.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                parsed = int(value)
            elif isinstance(current, float):
                parsed = float(value)
            else:
                parsed = json.loads(f'"{value}"')
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None
        setattr(self, name, parsed)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV, "runs"))


@dataclass
class Setup:
    """Everything a run needs that is derived from a RunConfig."""

    tokenizer: Tokenizer
    prompt: list[int]
    target: list[int]
    denoiser: object
    ngram: NGramDenoiser | None = None
    delimiters: DelimiterSet = field(default_factory=lambda: DelimiterSet(frozenset()))


def build(cfg: RunConfig) -> Setup:
    lines = load_corpus(cfg.corpus or None)
    prompt_text = lines[0] if cfg.prompt is None else cfg.prompt
    tok = Tokenizer.from_corpus(lines + [prompt_text], cfg.delimiters)
    prompt = tok.tokenize(prompt_text)
    tail = lines[cfg.target_line % len(lines):] + lines[:cfg.target_line % len(lines)]
    stream = tok.tokenize("\n" + "\n".join(tail))
    target = [stream[i % len(stream)] for i in range(cfg.gen_len)]
    ngram = None
    if cfg.denoiser == "oracle":
        den = OracleDenoiser(tuple(target), tok.vocab_size, tok.mask_id, len(prompt),
                             cfg.mu, cfg.gamma, cfg.sigma, cfg.phi, cfg.flip_prob, cfg.flip_law)
    else:
        ngram = ngram_fit(lines, tok, cfg.ngram_order, cfg.ngram_k, cfg.ngram_lambda)
        den = ngram
    return Setup(tok, prompt, target, den, ngram, DelimiterSet.from_tokenizer(tok))


def scheduler_config(cfg: RunConfig, setup: Setup, scheduler: str | None = None,
                     seed: int | None = None) -> SchedulerConfig:
    kind, k = parse_scheduler(scheduler or cfg.scheduler, cfg.k)
    return SchedulerConfig(
        kind=kind,
        bounds=SizingBounds(cfg.alpha, cfg.beta, cfg.tau_floor),
        snap=SnapConfig(cfg.lmin, cfg.w, cfg.snap_mode),
        gen_len=cfg.gen_len,
        seed=cfg.seed if seed is None else seed,
        k=k,
        delimiters=setup.delimiters,
        gather_penalty=cfg.gather_penalty,
    )


def execute(cfg: RunConfig, setup: Setup | None = None, scheduler: str | None = None,
            seed: int | None = None) -> tuple[Trace, RunSummary, Setup]:
    setup = setup or build(cfg)
    scfg = scheduler_config(cfg, setup, scheduler, seed)
    state0 = SequenceState.start(setup.prompt, cfg.gen_len, setup.tokenizer.mask_id)
    _, trace = run(state0, setup.denoiser, scfg)
    summary = summarize(trace, target=setup.target if setup.ngram is None else None,
                        ngram=setup.ngram, seed=scfg.seed)
    return trace, summary, setup


def trace_jsonl(trace: Trace) -> str:
    out = io.StringIO()
    for rec in trace.records:
        out.write(json.dumps(rec.to_json_dict(), separators=(",", ":")))
        out.write("\n")
    return out.getvalue()


def write_trace(trace: Trace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_jsonl(trace))
    return path


def read_trace_rows(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_summary(summary: RunSummary, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    return path


def trace_flip_rate(path, gen_len: int | None = None, window=(0.25, 0.75)) -> float:
    return flip_rate_from_rows(read_trace_rows(path), gen_len, window)


# -- bench ------------------------------------------------------------------

def _bench_one(args):
    cfg, scheduler, seed = args
    _, summary, _ = execute(cfg, scheduler=scheduler, seed=seed)
    return summary


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def bench(cfg: RunConfig) -> list[dict]:
    """Cross product of schedulers and seeds; returns data rows then one aggregate row per scheduler."""
    if len(cfg.schedulers) < 2:
        raise ConfigError("schedulers", "bench needs at least two schedulers")
    labels = []
    for s in cfg.schedulers:
        kind, k = parse_scheduler(s, cfg.k)
        labels.append(f"fixed_prefix({k})" if kind == "fixed_prefix" else kind)
    full_listed = "full" in labels
    jobs = [(cfg, s, seed) for s in cfg.schedulers for seed in cfg.seeds]
    if not full_listed:
        jobs += [(cfg, "full", seed) for seed in cfg.seeds]
    try:
        if cfg.jobs > 1:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                results = list(pool.map(_bench_one, jobs))
        else:
            results = [_bench_one(j) for j in jobs]
    except Exception as exc:
        raise RuntimeError(f"bench run failed: {exc}") from exc

    by_key = {(label, seed): results[i * len(cfg.seeds) + j]
              for i, label in enumerate(labels) for j, seed in enumerate(cfg.seeds)}
    if full_listed:
        full = {seed: by_key[("full", seed)] for seed in cfg.seeds}
    else:
        base = len(labels) * len(cfg.seeds)
        full = {seed: results[base + j] for j, seed in enumerate(cfg.seeds)}

    rows = []
    for label in labels:
        for seed in cfg.seeds:
            s = by_key[(label, seed)]
            rows.append({
                "scheduler": label, "seed": seed, "steps": s.total_steps,
                "calls": s.denoiser_calls, "cost": s.total_cost,
                "gather_events": s.gather_events, "flip_rate": s.flip_rate,
                "speedup_vs_full": speedup(s, full[seed]), "exact_match": s.exact_match,
            })
    for label in labels:
        group = [r for r in rows if r["scheduler"] == label]
        agg = {"scheduler": label, "seed": "mean±std"}
        for col in CSV_COLUMNS[2:]:
            vals = [r[col] for r in group if r[col] is not None]
            if not vals:
                agg[col] = None
                continue
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            agg[col] = f"{statistics.fmean(vals):.6g}±{sd:.6g}"
        rows.append(agg)
    return rows


def write_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return path
