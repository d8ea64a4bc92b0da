"""Batch front end: ``python -m ellipslice --mode {sample,verify,bench}``.

A run is described by a TOML file plus flag overrides.  Example::

    mode = "sample"
    seed = 7

    [model]
    dim = 1
    likelihood = { name = "gaussian", mean = [1.0], sigma = 1.0 }
    covariance = { kind = "spectral", eigenvalues = [1.0] }

    [chain]
    n_steps = 100000
    burn_in = 1000
    n_chains = 2

Outputs are deterministic given the configuration and seed.  Every file
starts with (CSV) or contains (JSON) the configuration hash and seed;
wall-clock measurements go to separate ``timing`` files so the result
files stay byte-identical between runs.

Exit codes: 0 success, 1 a verification test failed, 2 configuration
error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, EllipSliceError
from .ess import VARIANTS, TargetModel, run_chain
from .gaussian import DenseCovariance, SpectralCovariance, power_law
from .likelihoods import make_likelihood
from .rng import RngStream
from .shrinkage import DEFAULT_CAP
from . import verify

EXIT_OK, EXIT_TEST_FAILURE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
MODES = ("sample", "verify", "bench")
BENCH_DIMS = (2, 16, 64, 256)
BENCH_MODELS = ("constant", "conjugate")


@dataclass
class RunConfig:
    mode: str = "sample"
    seed: int = 0
    out_dir: str = "ellipslice-out"
    threads: int = 1
    # model
    dim: int = 1
    likelihood: dict = field(default_factory=lambda: {"name": "gaussian", "mean": [1.0], "sigma": 1.0})
    covariance: dict = field(default_factory=lambda: {"kind": "identity"})
    # chain
    n_steps: int = 1000
    burn_in: int = 0
    n_chains: int = 1
    cap: int = DEFAULT_CAP
    variant: str = "reformulated"
    x0: Optional[list] = None
    # verify
    tests: list = field(default_factory=lambda: list(verify.DEFAULT_SUITE))
    test_params: dict = field(default_factory=dict)
    fault_injection: bool = False
    # bench
    bench_dims: list = field(default_factory=lambda: list(BENCH_DIMS))
    bench_models: list = field(default_factory=lambda: list(BENCH_MODELS))
    bench_steps: int = 500

    # settings that cannot change any result
    _NEUTRAL = ("out_dir", "threads")

    def config_hash(self) -> str:
        """SHA-256 prefix of the canonical JSON of all result-relevant settings."""
        d = {k: v for k, v in asdict(self).items() if k not in self._NEUTRAL}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# configuration parsing

_SECTIONS = {
    "": {"mode", "seed", "out_dir", "threads"},
    "model": {"dim", "likelihood", "covariance"},
    "chain": {"n_steps", "burn_in", "n_chains", "cap", "variant", "x0"},
    "verify": {"tests", "params", "fault_injection"},
    "bench": {"dims", "models", "n_steps"},
}


def _line_of(text: Optional[str], section: str, key: str) -> Optional[int]:
    """1-based line of ``key = ...`` inside ``[section]`` (best effort)."""
    if not text:
        return None
    current = ""
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, raw in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[+\s*([^\]]+?)\s*\]+", raw)
        if head:
            current = head.group(1)
            continue
        if current == section and pat.match(raw):
            return i
    return None


def parse_config(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", line=int(m.group(1)) if m else None) from None


def build_config(data: dict, text: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Validate a parsed TOML mapping (plus flag overrides) into a RunConfig."""
    cfg = RunConfig()

    def err(msg, section, key):
        name = f"{section}.{key}" if section else key
        return ConfigError(msg, field=name, line=_line_of(text, section, key))

    for section, keys in _SECTIONS.items():
        block = data if section == "" else data.get(section, {})
        if not isinstance(block, dict):
            raise err(f"[{section}] must be a table", "", section)
        for key in block:
            if section == "" and key in _SECTIONS:
                continue
            if key not in keys:
                raise err(f"unknown setting {key!r}", section, key)

    def get(section, key, kind, default):
        block = data if section == "" else data.get(section, {})
        if key not in block:
            return default
        value = block[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            raise err(f"expected {kind.__name__}, got {type(value).__name__}", section, key)
        return value

    cfg.mode = get("", "mode", str, cfg.mode)
    cfg.seed = get("", "seed", int, cfg.seed)
    cfg.out_dir = get("", "out_dir", str, cfg.out_dir)
    cfg.threads = get("", "threads", int, cfg.threads)
    cfg.dim = get("model", "dim", int, cfg.dim)
    cfg.likelihood = get("model", "likelihood", dict, cfg.likelihood)
    cfg.covariance = get("model", "covariance", dict, cfg.covariance)
    cfg.n_steps = get("chain", "n_steps", int, cfg.n_steps)
    cfg.burn_in = get("chain", "burn_in", int, cfg.burn_in)
    cfg.n_chains = get("chain", "n_chains", int, cfg.n_chains)
    cfg.cap = get("chain", "cap", int, cfg.cap)
    cfg.variant = get("chain", "variant", str, cfg.variant)
    cfg.x0 = get("chain", "x0", list, cfg.x0)
    cfg.tests = get("verify", "tests", list, cfg.tests)
    cfg.test_params = get("verify", "params", dict, cfg.test_params)
    cfg.fault_injection = get("verify", "fault_injection", bool, cfg.fault_injection)
    cfg.bench_dims = get("bench", "dims", list, cfg.bench_dims)
    cfg.bench_models = get("bench", "models", list, cfg.bench_models)
    cfg.bench_steps = get("bench", "n_steps", int, cfg.bench_steps)

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)

    if cfg.mode not in MODES:
        raise err(f"mode must be one of {MODES}, got {cfg.mode!r}", "", "mode")
    if not 0 <= cfg.seed < 2 ** 64:
        raise err("seed must be a 64-bit non-negative integer", "", "seed")
    if cfg.threads < 1:
        raise err("threads must be >= 1", "", "threads")
    if cfg.dim < 1:
        raise err("dim must be >= 1", "model", "dim")
    if cfg.n_steps < 1:
        raise err("n_steps must be >= 1", "chain", "n_steps")
    if not 0 <= cfg.burn_in < cfg.n_steps:
        raise err("burn_in must satisfy 0 <= burn_in < n_steps", "chain", "burn_in")
    if cfg.n_chains < 1:
        raise err("n_chains must be >= 1", "chain", "n_chains")
    if cfg.cap < 1:
        raise err("cap must be >= 1", "chain", "cap")
    if cfg.variant not in VARIANTS:
        raise err(f"variant must be one of {VARIANTS}", "chain", "variant")
    if cfg.x0 is not None and len(cfg.x0) != cfg.dim:
        raise err(f"x0 has {len(cfg.x0)} entries, expected {cfg.dim}", "chain", "x0")
    if cfg.mode == "verify":
        if not cfg.tests:
            raise err("the test list is empty", "verify", "tests")
        for name in cfg.tests:
            if name not in verify.SUITE:
                raise err(f"unknown test {name!r}; choose from {sorted(verify.SUITE)}", "verify", "tests")
        for name in cfg.test_params:
            if name not in verify.SUITE:
                raise err(f"parameters given for unknown test {name!r}", "verify.params", name)
    if cfg.bench_steps < 1:
        raise err("n_steps must be >= 1", "bench", "n_steps")
    for m in cfg.bench_models:
        if m not in BENCH_MODELS:
            raise err(f"bench model must be one of {BENCH_MODELS}", "bench", "models")
    for d in cfg.bench_dims:
        if not isinstance(d, int) or d < 1:
            raise err("bench dimensions must be positive integers", "bench", "dims")
    cfg._text = text
    return cfg


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    text = None
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        data = parse_config(text)
    return build_config(data, text, overrides)


def build_covariance(table: dict, dim: int):
    kind = table.get("kind", "identity")
    if kind == "identity":
        return SpectralCovariance(np.ones(dim))
    if kind == "spectral":
        return SpectralCovariance(table["eigenvalues"])
    if kind == "power_law":
        return power_law(dim, float(table.get("exponent", 2.0)))
    if kind == "dense":
        return DenseCovariance(table["matrix"])
    raise ConfigError(f"unknown covariance kind {kind!r}", field="model.covariance.kind")


def build_model(cfg: RunConfig) -> TargetModel:
    text = getattr(cfg, "_text", None)
    try:
        prior = build_covariance(cfg.covariance, cfg.dim)
    except KeyError as exc:
        raise ConfigError(f"covariance is missing {exc}", field="model.covariance",
                          line=_line_of(text, "model", "covariance")) from None
    except (EllipSliceError, ValueError) as exc:
        raise ConfigError(f"bad covariance: {exc}", field="model.covariance",
                          line=_line_of(text, "model", "covariance")) from None
    params = dict(cfg.likelihood)
    name = params.pop("name", None)
    if name is None:
        raise ConfigError("likelihood needs a name", field="model.likelihood.name",
                          line=_line_of(text, "model", "likelihood"))
    try:
        lik = make_likelihood(name, cfg.dim, **params)
        return TargetModel(lik, prior, cfg.dim, name=name)
    except ConfigError as exc:
        exc.line = exc.line or _line_of(text, "model", "likelihood")
        raise
    except (EllipSliceError, ValueError) as exc:
        raise ConfigError(f"bad model: {exc}", field="model",
                          line=_line_of(text, "model", "likelihood")) from None


# ---------------------------------------------------------------------------
# output helpers


def _num(x) -> str:
    return format(float(x), ".17g")


def _header(cfg: RunConfig) -> str:
    return f"# config_hash={cfg.config_hash()} seed={cfg.seed}\n"


def _write(path: str, content: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def chain_csv(cfg: RunConfig, result) -> str:
    d = result.samples.shape[1]
    lines = [_header(cfg).rstrip("\n"),
             ",".join(["step"] + [f"coord_{i}" for i in range(d)] + ["shrink_iters", "llh_evals", "cap_hit"])]
    for i in range(result.n_steps):
        row = [str(i)] + [_num(v) for v in result.samples[i]]
        row += [str(int(result.shrink_iterations[i])), str(int(result.likelihood_evals[i])),
                str(int(result.cap_hit[i]))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_sample(cfg: RunConfig) -> int:
    model = build_model(cfg)
    x0 = np.zeros(cfg.dim) if cfg.x0 is None else np.asarray(cfg.x0, dtype=np.float64)
    root = RngStream(cfg.seed)

    def job(k):
        return run_chain(model, x0, cfg.n_steps, root.split(k), cfg.cap, cfg.variant)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(job, range(cfg.n_chains)))
    os.makedirs(cfg.out_dir, exist_ok=True)
    chains, timing = [], []
    for k, res in enumerate(results):
        _write(os.path.join(cfg.out_dir, f"chain_{k}.csv"), chain_csv(cfg, res))
        s = res.summary(cfg.burn_in)
        s["chain"] = k
        s["cap_hit_rate"] = s["cap_hits"] / res.n_steps
        chains.append(s)
        timing.append({"chain": k, "wall_time_s": res.wall_time,
                       "steps_per_s": res.n_steps / res.wall_time if res.wall_time > 0 else None})
    kept = np.concatenate([r.samples[cfg.burn_in:] for r in results])
    summary = {
        "config_hash": cfg.config_hash(), "seed": cfg.seed, "mode": "sample",
        "model": {"likelihood": cfg.likelihood, "covariance": cfg.covariance, "dim": cfg.dim},
        "variant": cfg.variant, "cap": cfg.cap, "n_chains": cfg.n_chains,
        "mean": kept.mean(axis=0).tolist(),
        "variance": kept.var(axis=0, ddof=1).tolist() if len(kept) > 1 else [0.0] * cfg.dim,
        "mean_shrink_iters": float(np.mean([r.shrink_iterations.mean() for r in results])),
        "mean_llh_evals_per_step": float(np.mean([r.likelihood_evals.mean() for r in results])),
        "cap_hits": int(sum(r.cap_hits for r in results)),
        "chains": chains,
    }
    _write(os.path.join(cfg.out_dir, "summary.json"), _json(summary))
    _write(os.path.join(cfg.out_dir, "timing.json"),
           _json({"config_hash": cfg.config_hash(), "seed": cfg.seed, "chains": timing}))
    print(f"sampled {cfg.n_chains} chain(s) of {cfg.n_steps} steps into {cfg.out_dir}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    try:
        reports = verify.run_suite(cfg.tests, cfg.seed, fault_injection=cfg.fault_injection,
                                   cap=cfg.cap, params=cfg.test_params, threads=cfg.threads)
    except ConfigError as exc:
        text = getattr(cfg, "_text", None)
        if exc.line is None and exc.field and exc.field.startswith("verify.params."):
            parts = exc.field.split(".")
            exc.line = _line_of(text, f"verify.params.{parts[2]}", parts[-1])
        raise
    os.makedirs(cfg.out_dir, exist_ok=True)
    extra = {"config_hash": cfg.config_hash(), "seed": cfg.seed}
    for r in reports:
        doc = dict(json.loads(r.to_json()), **extra)
        _write(os.path.join(cfg.out_dir, f"{r.test_name}.json"), _json(doc))
        print(r.line())
    summary = dict(verify.summarize(reports), fault_injection=cfg.fault_injection, **extra)
    _write(os.path.join(cfg.out_dir, "verify_summary.json"), _json(summary))
    _write(os.path.join(cfg.out_dir, "timing.json"),
           _json(dict(extra, runtime_ms={r.test_name: r.runtime_ms for r in reports})))
    print(f"overall: {summary['overall']}")
    return EXIT_TEST_FAILURE if summary["overall"] == "fail" else EXIT_OK


def bench_model(kind: str, dim: int) -> TargetModel:
    if kind == "constant":
        return TargetModel(make_likelihood("constant", dim), power_law(dim, 2.0), name="constant")
    return verify.conjugate_model(dim)


def cmd_bench(cfg: RunConfig) -> int:
    jobs = [(m, d) for m in cfg.bench_models for d in cfg.bench_dims]
    root = RngStream(cfg.seed)

    def job(idx):
        kind, dim = jobs[idx]
        model = bench_model(kind, dim)
        return run_chain(model, np.zeros(dim), cfg.bench_steps, root.split(idx), cfg.cap, cfg.variant)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(job, range(len(jobs))))
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = ["model,dim,n_steps,mean_llh_evals_per_step,mean_shrink_iters,cap_hits"]
    trows = ["model,dim,wall_time_s,steps_per_s"]
    for (kind, dim), res in zip(jobs, results):
        rows.append(f"{kind},{dim},{res.n_steps},{_num(res.likelihood_evals.mean())},"
                    f"{_num(res.shrink_iterations.mean())},{res.cap_hits}")
        rate = res.n_steps / res.wall_time if res.wall_time > 0 else float("nan")
        trows.append(f"{kind},{dim},{res.wall_time:.6f},{rate:.1f}")
    _write(os.path.join(cfg.out_dir, "bench.csv"), _header(cfg) + "\n".join(rows) + "\n")
    _write(os.path.join(cfg.out_dir, "bench_timing.csv"), _header(cfg) + "\n".join(trows) + "\n")
    print("\n".join(rows))
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "verify": cmd_verify, "bench": cmd_bench}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ellipslice", description="Elliptical slice sampling runs and checks.")
    p.add_argument("--mode", choices=MODES, help="what to run (overrides the config file)")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int, help="root seed (64-bit)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--cap", type=int, help="shrinkage evaluation cap per step")
    p.add_argument("--variant", choices=VARIANTS, help="transition implementation")
    p.add_argument("--threads", type=int, help="worker threads for chains and tests")
    p.add_argument("--fault-injection", dest="fault_injection", action="store_true", default=None,
                   help="run verification negative controls (they should fail)")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in
                 ("mode", "seed", "out_dir", "cap", "variant", "threads", "fault_injection")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
