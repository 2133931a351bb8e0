"""Command-line front end.

Subcommands: ``simulate``, ``estimate``, ``verify``, ``irf``, ``normalize``
and ``check-identification``.  Run ``hetsvar <command> --help`` for flags.

The estimation config is one JSON document::

    {
      "data":    {"deterministic": ["const"], "variables": ["y1", "y2"]},
      "model":   {"p": 1, "stationary": false},
      "priors":  {},
      "gibbs":   {"n_burn": 1000, "n_keep": 1000, "thin": 1, "seed": 0},
      "outputs": {"store_h": false}
    }

``data.deterministic`` names CSV columns or the built-in helpers ``const``,
``trend`` and ``trend2`` (a CSV column of the same name takes precedence).
``data.variables`` defaults to every CSV column that is not deterministic.
An empty ``priors`` section gives the default hyperparameters.  Chain ``k``
of ``--chains K --seed S`` runs with seed ``S + k``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .gibbs import GibbsConfig, GibbsError, run_chain
from .io import read_blocks, read_moments, read_posterior, to_jsonable, write_moments, write_posterior
from .model import ModelConfig, PosteriorSample, PriorConfig, TimeSeriesData, build_regressors, prior_mean_A
from .sddr import VerificationInfeasible, compute_sddr, log_prior_ordinate_at_zero, write_sddr_table
from .simulate import DgpSpec, UnstableSpecError, generate, preset, PRESETS
from .structural import (
    NormalizationBenchmark,
    benchmark_from_mode,
    irf_quantiles,
    normalize_sample,
    write_csv,
    write_irf_csv,
)
from .theory import identification_report

__all__ = ["main", "build_parser", "ConfigError", "deterministic_columns", "load_config", "config_digest"]

REQUIRED_KEYS = ("data", "model", "priors", "gibbs", "model.p", "gibbs.n_burn", "gibbs.n_keep")
HELPERS = ("const", "trend", "trend2")


class ConfigError(ValueError):
    """The configuration is missing a key or holds an invalid value."""


class CliError(RuntimeError):
    """Failure reported to the user with exit status ``code``."""

    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def deterministic_columns(names, T: int) -> np.ndarray:
    """Build ``const``, ``trend`` (1..T) and ``trend2`` columns, shape (T, len(names))."""
    t = np.arange(1, T + 1, dtype=float)
    table = {"const": np.ones(T), "trend": t, "trend2": t * t}
    cols = []
    for name in names:
        if name not in table:
            raise ConfigError(f"unknown deterministic helper {name!r}; choose from {list(HELPERS)}")
        cols.append(table[name])
    return np.column_stack(cols) if cols else np.zeros((T, 0))


def canonical_json(obj) -> bytes:
    return (json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n").encode("utf-8")


def config_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _lookup(cfg, path):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"missing config key: {path}")
        node = node[part]
    return node


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    for key in REQUIRED_KEYS:
        _lookup(cfg, key)
    cfg.setdefault("outputs", {})
    return cfg


def read_csv_table(path):
    """Header and float matrix of a CSV file; the error names the offending row and field."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CliError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CliError(f"{path}: line {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise CliError(f"{path}: line {i}, field {header[j]!r}: cannot parse {cell!r}") from None
            if not np.isfinite(values[i - 2, j]):
                raise CliError(f"{path}: line {i}, field {header[j]!r}: non-finite value {cell!r}")
    return header, values


def dataset_from_csv(path, data_cfg: dict) -> TimeSeriesData:
    header, values = read_csv_table(path)
    det = list(data_cfg.get("deterministic", []))
    variables = data_cfg.get("variables") or [h for h in header if h not in det]
    missing = [v for v in variables if v not in header]
    if missing:
        raise CliError(f"{path}: variables {missing} not in header {header}")
    Y = values[:, [header.index(v) for v in variables]]
    T = Y.shape[0]
    cols = []
    for name in det:
        if name in header:
            cols.append(values[:, header.index(name)])
        else:
            cols.append(deterministic_columns([name], T)[:, 0])
    D = np.column_stack(cols) if cols else None
    return TimeSeriesData(Y, D, variables)


def _chain_paths(artifact):
    """Resolve a chain directory or posterior file to (posterior, moments, manifest)."""
    p = Path(artifact)
    if p.is_dir():
        return p / "posterior.bin", p / "moments.bin", p / "manifest.json"
    return p, p.with_name("moments.bin"), p.with_name("manifest.json")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _spec_from_json(path, seed, T, allow_unstable):
    raw = json.loads(Path(path).read_text())
    try:
        B0, A, omega, rho = raw["B0"], raw["A"], raw["omega"], raw["rho"]
    except KeyError as exc:
        raise ConfigError(f"missing spec key: {exc.args[0]}") from None
    T = T if T is not None else int(raw.get("T", 300))
    p = int(raw.get("p", 1))
    det = raw.get("deterministic", ["const"])
    N = len(B0)
    d = len(A[0]) - N * p
    if d != len(det):
        raise ConfigError(f"A has {d} deterministic columns but deterministic lists {len(det)}")
    return DgpSpec(B0=B0, A=A, omega=omega, rho=rho, T=T, p=p,
                   seed=seed if seed is not None else int(raw.get("seed", 0)),
                   D=deterministic_columns(det, T), allow_unstable=allow_unstable,
                   names=tuple(raw.get("names", ()))), det


def cmd_simulate(args) -> int:
    if args.spec:
        spec, det = _spec_from_json(args.spec, args.seed, args.T, args.allow_unstable)
    else:
        base = preset(args.preset, T=args.T or 300, seed=args.seed or 0)
        spec, det = base, ["const"]
    sim = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data = sim.data
    with open(out, "w", newline="") as fh:
        rows = (list(data.Y[t]) + list(data.D[t]) for t in range(data.T))
        write_csv(fh, list(data.names) + list(det), rows)
    truth = {
        "B0": spec.B0, "A": spec.A, "omega": spec.omega, "rho": spec.rho,
        "T": spec.T, "p": spec.p, "seed": spec.seed, "deterministic": det,
        "names": data.names, "h": sim.h, "sigma2": sim.sigma2,
    }
    truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    truth_path.write_bytes(canonical_json(truth))
    print(f"wrote {out} and {truth_path}")
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def _run_one(job):
    data, mcfg, priors, gcfg, chain = job
    return run_chain(data, mcfg, priors, gcfg, chain_id=chain)


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    try:
        priors = PriorConfig.from_dict(cfg["priors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"priors: {exc}") from None
    data = dataset_from_csv(args.data, cfg["data"])
    model = cfg["model"]
    try:
        mcfg = ModelConfig.for_data(data, p=int(model["p"]), stationary=model.get("stationary", False))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    g = cfg["gibbs"]
    base_seed = args.seed if args.seed is not None else int(g.get("seed", 0))
    store_h = bool(args.store_h or cfg["outputs"].get("store_h", False))
    Yt, X = build_regressors(data, mcfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raw = canonical_json(cfg)
    (out / "config.json").write_bytes(raw)
    digest = config_digest(raw)

    jobs = []
    for k in range(args.chains):
        gcfg = GibbsConfig(n_burn=int(g["n_burn"]), n_keep=int(g["n_keep"]), thin=int(g.get("thin", 1)),
                           seed=base_seed + k, prior_only=bool(g.get("prior_only", False)), store_h=store_h)
        jobs.append((data, mcfg, priors, gcfg, k))
    started = _now()
    if args.jobs > 1 and args.chains > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            samples = list(pool.map(_run_one, jobs))
    else:
        samples = [_run_one(j) for j in jobs]

    info = {"priors": priors.to_dict(), "names": list(data.names),
            "deterministic": list(cfg["data"].get("deterministic", [])),
            "stationary_flags": list(mcfg.stationary_flags)}
    for (_, _, _, gcfg, k), sample in zip(jobs, samples):
        chain_dir = out / f"chain{k}"
        chain_dir.mkdir(exist_ok=True)
        write_posterior(chain_dir / "posterior.bin", sample, Yt, X, info)
        write_moments(chain_dir / "moments.bin", sample, {"priors": priors.to_dict()})
        manifest = {
            "config_digest": digest,
            "config_path": "../config.json",
            "seed": gcfg.seed,
            "base_seed": base_seed,
            "seed_rule": "base seed + chain index",
            "chain": k,
            "chain_count": args.chains,
            "started": started,
            "finished": _now(),
            "artifacts": {"posterior": "posterior.bin", "moments": "moments.bin"},
            "store_h": store_h,
        }
        (chain_dir / "manifest.json").write_bytes(canonical_json(manifest))
    print(f"wrote {args.chains} chain(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    means, variances, priors = [], [], None
    for art in args.artifact:
        _, moments_path, _ = _chain_paths(art)
        header, _ = read_blocks(moments_path)
        priors = PriorConfig.from_dict(header["info"]["priors"])
        m, v = read_moments(moments_path)
        means.append(m)
        variances.append(v)
    mean, var = np.concatenate(means), np.concatenate(variances)
    try:
        log_prior_ordinate_at_zero(priors)
    except VerificationInfeasible as exc:
        raise CliError(f"verification infeasible: {exc}", code=2) from None
    n, N = mean.shape
    zeros = np.zeros((n, N))
    sample = PosteriorSample(
        B0=np.zeros((n, N, N)), A=np.zeros((n, N, 0)), omega=zeros, rho=zeros, sigma2_omega=zeros,
        gamma_0=zeros, s_0=zeros, s_gamma0=np.zeros(n), gamma_A=zeros, s_A=zeros, s_gammaA=np.zeros(n),
        omega_mean=mean, omega_var=var,
    )
    results = [compute_sddr(sample, j, priors, n_subsamples=args.subsamples) for j in range(N)]
    labels = [str(j + 1) for j in range(N)]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_sddr_table(results, labels, fh, verbose=args.verbose)
    else:
        write_sddr_table(results, labels, sys.stdout, verbose=args.verbose)
    return 0


# ---------------------------------------------------------------------------
# irf
# ---------------------------------------------------------------------------

def cmd_irf(args) -> int:
    post, moments, _ = _chain_paths(args.artifact)
    sample, _, _, header = read_posterior(post, moments if moments.exists() else None)
    p = int(sample.meta.get("p", 1))
    probs = tuple(float(x) for x in args.probs.split(","))
    kw = {}
    if args.shock is not None:
        kw = {"shock": args.shock - 1, "variable": (args.variable or args.shock) - 1, "impact": args.impact}
    q = irf_quantiles(sample, args.horizon, p, probs, **kw)
    names = header["info"].get("names") or [f"y{i + 1}" for i in range(sample.N)]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_irf_csv(fh, q, probs, names)
    else:
        write_irf_csv(sys.stdout, q, probs, names)
    return 0


# ---------------------------------------------------------------------------
# normalize
# ---------------------------------------------------------------------------

def cmd_normalize(args) -> int:
    post, moments, _ = _chain_paths(args.artifact)
    sample, Yt, X, header = read_posterior(post, moments)
    info = dict(header["info"])
    priors = PriorConfig.from_dict(info["priors"])
    if args.benchmark == "from-mode":
        p, n_det = int(sample.meta.get("p", 1)), int(sample.meta.get("n_det", 0))
        mcfg = ModelConfig(p=p, stationary_flags=tuple(info["stationary_flags"]), n_det=n_det)
        try:
            B0_hat = benchmark_from_mode(sample, Yt, X, priors, prior_mean_A(mcfg), priors.omega_bar(sample.N, p, n_det))
        except ValueError as exc:
            raise CliError(str(exc)) from None
        bench = NormalizationBenchmark(B0_hat)
        label = "from-mode"
    else:
        raw = json.loads(Path(args.benchmark).read_text())
        if "B0_hat" not in raw:
            raise ConfigError("missing benchmark key: B0_hat")
        bench = NormalizationBenchmark(raw["B0_hat"], raw.get("Omega_hat"))
        label = "file"
    out_sample = normalize_sample(sample, bench)
    info["normalized"] = label
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_posterior(out / "posterior.bin", out_sample, Yt, X, info)
    write_moments(out / "moments.bin", out_sample, {"priors": priors.to_dict()})
    print(f"wrote normalized artifact to {out}")
    return 0


# ---------------------------------------------------------------------------
# check-identification
# ---------------------------------------------------------------------------

def cmd_check_identification(args) -> int:
    raw = json.loads(Path(args.input).read_text())
    if "sigmas" not in raw:
        raise ConfigError("missing input key: sigmas")
    report = identification_report(raw["sigmas"], raw.get("lambdas"), rng=np.random.default_rng(args.seed))
    for entry in report:
        status = "identified" if entry["identified"] else "not identified"
        line = f"column {entry['column'] + 1}: {status}"
        if args.show_columns and entry["vector"] is not None:
            line += " " + " ".join(f"{v:.10g}" for v in entry["vector"])
        print(line)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetsvar", description="SVARs with stochastic volatility")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate data from a preset or a JSON spec")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), default="heteroskedastic")
    src.add_argument("--spec", help="JSON file with B0, A, omega, rho and optional T, p, seed, deterministic, names")
    p.add_argument("--T", type=int, default=None, help="sample length (preset default 300)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--allow-unstable", action="store_true", help="accept an explosive VAR")
    p.add_argument("--out", required=True, help="data CSV")
    p.add_argument("--truth", help="ground-truth JSON (default: <out>.truth.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run Gibbs chains")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="base seed (overrides gibbs.seed)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for multiple chains")
    p.add_argument("--store-h", action="store_true", help="keep log-volatility paths and indicators")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="Savage-Dickey table for omega_n = 0")
    p.add_argument("--artifact", nargs="+", required=True, help="chain directories (pooled)")
    p.add_argument("--subsamples", type=int, default=30)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("irf", help="posterior quantiles of impulse responses")
    p.add_argument("--artifact", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--probs", default="0.05,0.5,0.95")
    p.add_argument("--shock", type=int, help="1-based shock to rescale")
    p.add_argument("--variable", type=int, help="1-based variable whose impact response is fixed")
    p.add_argument("--impact", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_irf)

    p = sub.add_parser("normalize", help="fix row order and signs of B0 draws")
    p.add_argument("--artifact", required=True)
    p.add_argument("--benchmark", required=True, help="'from-mode' or a JSON file with B0_hat and optional Omega_hat")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("check-identification", help="which columns a covariance sequence identifies")
    p.add_argument("--input", required=True, help="JSON with sigmas (K+1 matrices) and optional lambdas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--show-columns", action="store_true")
    p.set_defaults(func=cmd_check_identification)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, UnstableSpecError, GibbsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
