"""Experiment runner: configuration, Monte Carlo trials, and reports.

An experiment fixes one channel and one precoder, runs ``trials``
independent trials (trial t draws everything it needs from the counter
stream keyed by (master_seed, t)), and aggregates the empirical transmit
energy against the closed-form references. Trials are chunked into
fixed-size blocks reduced in block order, so reports are byte-identical
for any worker count and across reruns.

Config files are JSON mirroring ExperimentConfig field names::

    {
      "m": 4,
      "channel_source": {"kind": "random", "seed": 7},
      "tau": 4.0,
      "precoder": {"kind": "vector_perturb", "b": 3},
      "trials": 10000,
      "master_seed": 12345,
      "condition_limit": 1e8
    }

Precoder variants:
  {"kind": "plain"}
  {"kind": "slm_random", "n": 4096,
   "region": {"kind": "hypercube", "expand": true}}      # or
   "region": {"kind": "ball", "radius": 1.0}
  {"kind": "vector_perturb", "b": 3}
  {"kind": "trellis", "generators": "7,5", "k_s": 1, "pam": 4}
  {"kind": "nested", "k": 2, "n_u": 1, "q": 2}

For ``slm_random`` the hypercube region may be expanded so the carrier
volume is N times the information volume (side tau * N^(1/M)); the ball
region is always used as-is (the fixed-region law). The information
entropy — hence sigma^2 and the theory references — always comes from the
base region: log2(tau) bits per dimension for hypercube-family precoders,
(1/M) log2(volume) for the ball.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import precoders, regions, shaping, theory
from .errors import (
    ConfigError,
    ParseError,
    ReportIOError,
)
from .theory import ChannelMatrix

CSV_HEADER = (
    "precoder,M,N,trials,mean_gamma,stderr_gamma,e_opt,e_slm_limit,"
    "channel_gain_db,gain_vs_plain_db,seed"
)

TRIAL_CHUNK = 256

_PRECODER_KINDS = ("plain", "slm_random", "vector_perturb", "trellis", "nested")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; see the module docstring for the schema."""

    m: int
    channel_source: Dict
    tau: float
    precoder: Dict
    trials: int
    master_seed: int
    condition_limit: float = 1e8

    @staticmethod
    def from_dict(d: Dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        required = {"m", "channel_source", "tau", "precoder", "trials", "master_seed"}
        allowed = required | {"condition_limit"}
        missing = required - d.keys()
        if missing:
            raise ConfigError(f"config is missing keys: {sorted(missing)}")
        unknown = d.keys() - allowed
        if unknown:
            raise ConfigError(f"config has unknown keys: {sorted(unknown)}")
        cfg = ExperimentConfig(
            m=int(d["m"]),
            channel_source=dict(d["channel_source"]),
            tau=float(d["tau"]),
            precoder=dict(d["precoder"]),
            trials=int(d["trials"]),
            master_seed=int(d["master_seed"]),
            condition_limit=float(d.get("condition_limit", 1e8)),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.condition_limit <= 1:
            raise ConfigError("condition_limit must exceed 1")
        kind = self.channel_source.get("kind")
        if kind not in ("file", "random", "inline"):
            raise ConfigError(f"channel_source.kind must be file/random/inline, got {kind!r}")
        if kind == "file" and "path" not in self.channel_source:
            raise ConfigError("channel_source.kind=file requires a path")
        if kind == "random" and "seed" not in self.channel_source:
            raise ConfigError("channel_source.kind=random requires a seed")
        if kind == "inline" and "matrix" not in self.channel_source:
            raise ConfigError("channel_source.kind=inline requires a matrix")
        p = self.precoder
        pk = p.get("kind")
        if pk not in _PRECODER_KINDS:
            raise ConfigError(f"precoder.kind must be one of {_PRECODER_KINDS}, got {pk!r}")
        if pk == "slm_random":
            if int(p.get("n", 0)) < 1:
                raise ConfigError("slm_random requires n >= 1")
            region = p.get("region", {"kind": "hypercube", "expand": True})
            rk = region.get("kind")
            if rk not in ("hypercube", "ball"):
                raise ConfigError(f"slm_random region.kind must be hypercube/ball, got {rk!r}")
            if rk == "ball" and float(region.get("radius", 0.0)) <= 0.0:
                raise ConfigError("ball region requires a positive radius")
        elif pk == "vector_perturb":
            if int(p.get("b", 0)) < 1:
                raise ConfigError("vector_perturb requires b >= 1")
        elif pk == "trellis":
            code = shaping.code_from_octal(
                p.get("generators", shaping.DEFAULT_CODE_SPEC),
                k_s=int(p.get("k_s", 1)),
            )
            if self.m % code.n_s:
                raise ConfigError(
                    f"m = {self.m} is not divisible by the code's n_s = {code.n_s}"
                )
            pam = int(p.get("pam", 4))
            if pam < 2 or pam & (pam - 1):
                raise ConfigError(f"pam must be a power of two >= 2, got {pam}")
        elif pk == "nested":
            k = int(p.get("k", 0))
            n_u = int(p.get("n_u", 1))
            q = int(p.get("q", 0))
            if k < 1 or n_u < 1 or q < 1:
                raise ConfigError("nested requires k >= 1, n_u >= 1, q >= 1")
            if k * 2 * n_u != self.m:
                raise ConfigError(
                    f"nested needs K*2*n_u = m, got {k}*2*{n_u} != {self.m}"
                )

    def to_dict(self) -> Dict:
        return {
            "m": self.m,
            "channel_source": self.channel_source,
            "tau": self.tau,
            "precoder": self.precoder,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "condition_limit": self.condition_limit,
        }


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportIOError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)


def _parse_channel_csv(text: str, path: str) -> np.ndarray:
    rows: List[List[float]] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{path}:{ln}: non-numeric entry") from None
    if not rows:
        raise ParseError(f"{path}: empty channel file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{path}: rows have unequal column counts")
    if len(rows) != width:
        raise ParseError(
            f"{path}: channel must be square, got {len(rows)} rows x {width} columns"
        )
    return np.array(rows, dtype=np.float64)


def load_channel(
    source: Dict,
    m: Optional[int] = None,
    condition_limit: float = 1e8,
) -> ChannelMatrix:
    """Build a validated channel from a file, a seeded ensemble, or inline data.

    File format: plain CSV, M rows of M comma-separated decimals, no
    header. Random channels draw i.i.d. standard normal entries from a
    dedicated counter stream of the seed, so the same seed is bit-identical
    across runs and platforms.
    """
    kind = source.get("kind")
    if kind == "file":
        path = source["path"]
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ReportIOError(f"cannot read channel file {path}: {exc}") from None
        h = _parse_channel_csv(text, str(path))
    elif kind == "random":
        if m is None:
            raise ConfigError("random channel needs the dimension m")
        gen = regions.channel_stream(int(source["seed"]))
        h = gen.standard_normal((m, m))
    elif kind == "inline":
        h = np.asarray(source["matrix"], dtype=np.float64)
    else:
        raise ConfigError(f"unknown channel source kind {kind!r}")
    if m is not None and h.shape != (m, m):
        raise ConfigError(f"channel is {h.shape} but config says m = {m}")
    return theory.build_channel(h, condition_limit=condition_limit)


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------


def _trial_energies(cfg: ExperimentConfig, ch: ChannelMatrix, t: int) -> Tuple[float, float]:
    """Run trial t; return (gamma of the precoder, gamma with no selection)."""
    p = cfg.precoder
    kind = p["kind"]
    m = cfg.m
    tau = cfg.tau
    if kind == "plain":
        sampler = regions.Sampler(regions.hypercube(tau, m), cfg.master_seed, t)
        u = sampler.draw()
        res = precoders.invert_precode(ch, u)
        return res.gamma, res.gamma
    if kind == "slm_random":
        n = int(p["n"])
        spec = p.get("region", {"kind": "hypercube", "expand": True})
        if spec["kind"] == "ball":
            region = regions.ball(float(spec["radius"]), m)
        else:
            base = regions.hypercube(tau, m)
            region = regions.expanded_region(base, n) if spec.get("expand", True) else base
        sampler = regions.Sampler(region, cfg.master_seed, t)
        candidates = sampler.draw(n)
        res = precoders.slm_random(ch, candidates)
        return res.gamma, ch.energy(candidates[0])
    if kind == "vector_perturb":
        b = int(p["b"])
        sampler = regions.Sampler(regions.hypercube(tau, m), cfg.master_seed, t)
        u = sampler.draw()
        res = precoders.vector_perturb(ch, u, tau, b)
        return res.gamma, ch.energy(u)
    if kind == "trellis":
        code = shaping.code_from_octal(
            p.get("generators", shaping.DEFAULT_CODE_SPEC), k_s=int(p.get("k_s", 1))
        )
        pam = int(p.get("pam", 4))
        cons = shaping.pam_constellation(pam, spacing=tau / pam, n_s=code.n_s, tau=tau)
        gen = regions.make_stream(cfg.master_seed, t)
        payload = gen.integers(0, 2, size=m * cons.bits_per_symbol)
        res = shaping.trellis_shape(ch, payload, code, cons)
        u0 = shaping.payload_to_coset(payload, np.zeros(m, dtype=np.int64), cons)
        return res.gamma, ch.energy(u0)
    if kind == "nested":
        k_users = int(p["k"])
        n_u = int(p.get("n_u", 1))
        q = int(p["q"])
        part = shaping.lattice_partition(n_u, q, spacing=tau / q)
        gen = regions.make_stream(cfg.master_seed, t)
        idx = gen.integers(0, part.coset_count, size=k_users)
        symbols = part.cosets[idx]
        res = shaping.nested_select(ch, symbols, part)
        return res.gamma, ch.energy(symbols.reshape(-1))
    raise ConfigError(f"unknown precoder kind {kind!r}")


def _candidate_count(cfg: ExperimentConfig) -> int:
    p = cfg.precoder
    kind = p["kind"]
    if kind == "plain":
        return 1
    if kind == "slm_random":
        return int(p["n"])
    if kind == "vector_perturb":
        return int(p["b"]) ** cfg.m
    if kind == "trellis":
        code = shaping.code_from_octal(
            p.get("generators", shaping.DEFAULT_CODE_SPEC), k_s=int(p.get("k_s", 1))
        )
        return code.codeword_count(cfg.m // code.n_s)
    if kind == "nested":
        return int(p["q"]) ** (2 * int(p.get("n_u", 1)) * int(p["k"]))
    raise ConfigError(f"unknown precoder kind {kind!r}")


def _run_chunk(cfg_dict: Dict, start: int, stop: int) -> Tuple[int, float, float, float]:
    """Worker entry point: accumulate energies for trials [start, stop)."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    ch = load_channel(cfg.channel_source, cfg.m, cfg.condition_limit)
    n = 0
    sum_g = 0.0
    sum_g2 = 0.0
    sum_plain = 0.0
    for t in range(start, stop):
        g, g_plain = _trial_energies(cfg, ch, t)
        n += 1
        sum_g += g
        sum_g2 += g * g
        sum_plain += g_plain
    return n, sum_g, sum_g2, sum_plain


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated experiment outcome plus closed-form references."""

    precoder: str
    m: int
    n_candidates: int
    trials: int
    mean_gamma: float
    stderr_gamma: float
    e_opt: float
    e_slm_limit: float
    channel_gain_db: float
    gain_vs_plain_db: float
    mean_plain: float
    eigenvalues: np.ndarray
    master_seed: int
    trial_seeds: Tuple[Tuple[int, int], ...]
    runtime_seconds: float


def information_sigma2(cfg: ExperimentConfig) -> float:
    """sigma^2 of the entropy-matched Gaussian for the experiment's data source."""
    p = cfg.precoder
    if p.get("kind") == "slm_random":
        spec = p.get("region", {"kind": "hypercube", "expand": True})
        if spec.get("kind") == "ball":
            region = regions.ball(float(spec["radius"]), cfg.m)
            return theory.sigma_from_entropy(region.entropy_bits_per_dim)
    return theory.sigma_from_entropy(math.log2(cfg.tau))


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run all trials and aggregate; deterministic for any worker count.

    Trial t draws from the stream keyed by (master_seed, t); trials are
    grouped into fixed chunks of 256 whose partial sums are reduced in
    chunk order, so scheduling cannot change the result.
    """
    t0 = time.perf_counter()
    ch = load_channel(cfg.channel_source, cfg.m, cfg.condition_limit)
    cfg_dict = cfg.to_dict()
    bounds = [
        (s, min(s + TRIAL_CHUNK, cfg.trials)) for s in range(0, cfg.trials, TRIAL_CHUNK)
    ]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(
                    _run_chunk,
                    [cfg_dict] * len(bounds),
                    [b[0] for b in bounds],
                    [b[1] for b in bounds],
                )
            )
    else:
        partials = [_run_chunk(cfg_dict, s, e) for s, e in bounds]
    n = 0
    sum_g = 0.0
    sum_g2 = 0.0
    sum_plain = 0.0
    for cn, cg, cg2, cp in partials:
        n += cn
        sum_g += cg
        sum_g2 += cg2
        sum_plain += cp
    mean = sum_g / n
    var = max(0.0, (sum_g2 - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    stderr = math.sqrt(var / n)
    mean_plain = sum_plain / n

    sigma2 = information_sigma2(cfg)
    rep = theory.theory_report(ch, sigma2)
    return ExperimentReport(
        precoder=cfg.precoder["kind"],
        m=cfg.m,
        n_candidates=_candidate_count(cfg),
        trials=cfg.trials,
        mean_gamma=mean,
        stderr_gamma=stderr,
        e_opt=rep.e_opt,
        e_slm_limit=rep.e_slm_limit,
        channel_gain_db=10.0 * math.log10(rep.channel_gain),
        gain_vs_plain_db=10.0 * math.log10(mean_plain / mean),
        mean_plain=mean_plain,
        eigenvalues=rep.eigenvalues,
        master_seed=cfg.master_seed,
        trial_seeds=tuple((cfg.master_seed, t) for t in range(cfg.trials)),
        runtime_seconds=time.perf_counter() - t0,
    )


def sweep_experiment(
    cfg: ExperimentConfig,
    param: str,
    values: Sequence[int],
    workers: int = 1,
) -> List[ExperimentReport]:
    """Re-run the experiment with the precoder's N or b swept over values."""
    if param not in ("n", "b"):
        raise ConfigError(f"sweep parameter must be 'n' or 'b', got {param!r}")
    reports = []
    for v in values:
        d = cfg.to_dict()
        d["precoder"] = dict(d["precoder"])
        d["precoder"][param] = int(v)
        reports.append(run_experiment(ExperimentConfig.from_dict(d), workers=workers))
    return reports


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _row_fields(report: ExperimentReport) -> List[Tuple[str, object]]:
    return [
        ("precoder", report.precoder),
        ("M", report.m),
        ("N", report.n_candidates),
        ("trials", report.trials),
        ("mean_gamma", report.mean_gamma),
        ("stderr_gamma", report.stderr_gamma),
        ("e_opt", report.e_opt),
        ("e_slm_limit", report.e_slm_limit),
        ("channel_gain_db", report.channel_gain_db),
        ("gain_vs_plain_db", report.gain_vs_plain_db),
        ("seed", report.master_seed),
    ]


def format_csv(reports: Sequence[ExperimentReport]) -> str:
    lines = [CSV_HEADER]
    for rep in reports:
        lines.append(",".join(_fmt(v) for _, v in _row_fields(rep)))
    return "\n".join(lines) + "\n"


def format_json(reports: Sequence[ExperimentReport]) -> str:
    objs = []
    for rep in reports:
        obj = dict(_row_fields(rep))
        obj["eigenvalues"] = [float(x) for x in rep.eigenvalues]
        objs.append(obj)
    payload = objs[0] if len(objs) == 1 else objs
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_report(reports, fmt: str, path: Optional[str]) -> str:
    """Serialize one report (or a sweep list) as csv/json; write if path given.

    Returns the serialized text. Excluded from serialization (by design,
    for byte-identical reruns): runtime and the per-trial seed list, which
    is fully determined by (master_seed, trials).
    """
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    if fmt == "csv":
        text = format_csv(reports)
    elif fmt == "json":
        text = format_json(reports)
    else:
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise ReportIOError(f"cannot write report {path}: {exc}") from None
    return text
