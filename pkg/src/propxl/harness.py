"""Experiment configuration, the three-step estimation pipeline and table runs.

Configuration is a flat text file, one ``key = value`` per line, ``#`` starts
a comment.  Distributions are written ``name(p1,p2)``; pairs as ``a, b``.
Unknown or repeated keys are rejected.  Example::

    claim = exponential(1)
    insurer.beta = 2
    insurer.loading = 0.8
    reinsurer.beta = 0.2
    reinsurer.loading = 0.3
    prior.alpha = beta(2,2)
    prior.m = exponential(2)
    data = 4.117, 1.434, 0.453
"""

from __future__ import annotations

import csv
import io
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .bayes import (
    BalancedWeights,
    CededSample,
    GridSpec,
    PosteriorSummary,
    PriorTriple,
    balanced_estimate,
    posterior_summary,
)
from .contract import ContractParams
from .distributions import ClaimModel, PriorSpec, parse_claim_model, parse_prior
from .errors import ConfigError, DomainError, PropXLError
from .insurer import SolveResult, solve_insurer
from .reinsurer import ReinsurerSolveResult, solve_reinsurer
from .utility import UtilityConfig

logger = logging.getLogger(__name__)

__all__ = [
    "TABLE1_WEIGHTS",
    "TABLE2_ROWS",
    "Table2Spec",
    "ExperimentConfig",
    "TableRow",
    "Table2Row",
    "PipelineReport",
    "parse_config",
    "load_config",
    "replication_seed",
    "observations",
    "run_pipeline",
    "table1_rows",
    "run_table2",
    "table1_csv",
    "table2_csv",
]

# (w1, w2) pairs tabulated for the Example 1 data: w1 fixed at 0.1 while w2
# runs 0.1..0.9, then w2 fixed at 0.1 while w1 runs 0.1..0.9.
TABLE1_WEIGHTS: tuple[tuple[float, float], ...] = tuple(
    [(0.1, round(0.1 * k, 1)) for k in range(1, 10)]
    + [(round(0.1 * k, 1), 0.1) for k in range(1, 10)]
)


@dataclass(frozen=True)
class Table2Spec:
    claim: ClaimModel
    alpha_prior: PriorSpec
    m_prior: PriorSpec
    label: str = ""

    @property
    def family_label(self) -> str:
        return self.label or str(self.claim)


TABLE2_ROWS: tuple[Table2Spec, ...] = (
    Table2Spec(ClaimModel.exponential(1.0), PriorSpec("beta", (2, 2)), PriorSpec("exponential", (2,)), "EXP(1)"),
    Table2Spec(ClaimModel.exponential(4.0), PriorSpec("beta", (2, 2)), PriorSpec("exponential", (2,)), "EXP(4)"),
    Table2Spec(ClaimModel.exponential(8.0), PriorSpec("beta", (3, 2)), PriorSpec("gamma", (2, 2)), "EXP(8)"),
    Table2Spec(ClaimModel.weibull(2.0, 1.0), PriorSpec("beta", (2, 4)), PriorSpec("gamma", (3, 2)), "Weibull(2,1)"),
    Table2Spec(ClaimModel.weibull(4.0, 1.0), PriorSpec("beta", (5, 2)), PriorSpec("gamma", (2, 4)), "Weibull(4,1)"),
    Table2Spec(ClaimModel.weibull(2.0, 4.0), PriorSpec("uniform", (0, 1)), PriorSpec("gamma", (3, 4)), "Weibull(2,4)"),
)

EXAMPLE1_DATA = (4.117, 1.434, 0.453, 3.333, 0.456, 0.0637, 0.145, 0.211, 3.618, 5.467)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one CLI invocation needs.  Defaults reproduce Example 1."""

    claim_model: ClaimModel = ClaimModel.exponential(1.0)
    insurer_cfg: UtilityConfig = UtilityConfig(beta=2.0, loading=0.8)
    reinsurer_cfg: UtilityConfig = UtilityConfig(beta=0.2, loading=0.3)
    priors: PriorTriple | None = None  # None: point mass at the claim parameter
    alpha_prior: PriorSpec = PriorSpec("beta", (2, 2))
    m_prior: PriorSpec = PriorSpec("exponential", (2,))
    weights: tuple[BalancedWeights, ...] = ()
    data: tuple[float, ...] | None = EXAMPLE1_DATA
    data_kind: str = "ceded"  # or "claims", then split with data_contract
    data_contract: ContractParams | None = None
    sample_n: int | None = None
    sample_seed: int = 0
    replications: int = 100
    grid: GridSpec = GridSpec()
    output_path: Path | None = None
    # optional overrides of the pipeline's intermediate results
    target0: ContractParams | None = None
    target1: ContractParams | None = None
    posterior_mean: tuple[float, float] | None = None
    # Table 2
    table2_rows: tuple[Table2Spec, ...] = TABLE2_ROWS
    table2_n: int = 100
    table2_grid: GridSpec = GridSpec(100, 100, 100)
    # surplus simulation
    sim_party: str = "insurer"
    sim_reps: int = 100_000
    sim_contract: ContractParams | None = None
    sim_neighbors: bool = False

    def __post_init__(self):
        has_data = self.data is not None
        has_gen = self.sample_n is not None
        if has_data == has_gen:
            raise ConfigError("give exactly one of inline/file data or a sample generator (sample.n)")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.data_kind not in ("ceded", "claims"):
            raise ConfigError(f"data.kind must be 'ceded' or 'claims', got {self.data_kind!r}")
        if self.data_kind == "claims" and self.data_contract is None:
            raise ConfigError("data.kind = claims needs data.contract = alpha, M")
        if self.sim_party not in ("insurer", "reinsurer"):
            raise ConfigError(f"sim.party must be insurer or reinsurer, got {self.sim_party!r}")
        if self.priors is None:
            theta = PriorSpec("pointmass", (self.claim_model.theta,))
            object.__setattr__(self, "priors", PriorTriple(theta, self.alpha_prior, self.m_prior))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, sample_seed=int(seed))


@dataclass(frozen=True)
class TableRow:
    w1: float
    w2: float
    one_minus: float
    alpha_hat: float
    m_hat: float

    def __post_init__(self):
        if abs(self.one_minus - (1.0 - self.w1 - self.w2)) > 1e-12:
            raise DomainError("one_minus must equal 1 - w1 - w2")


@dataclass(frozen=True)
class Table2Row:
    family: str
    prior_alpha: str
    prior_m: str
    mean_alpha: float
    sd_alpha: float
    mean_m: float
    sd_m: float
    estimates: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass
class PipelineReport:
    target0: ContractParams
    target1: ContractParams
    posterior_mean: tuple[float, float]
    rows: list[TableRow]
    insurer: SolveResult | None = None
    reinsurer: ReinsurerSolveResult | None = None
    posterior: PosteriorSummary | None = None

    def summary(self) -> str:
        lines = [
            f"insurer target    alpha={self.target0.alpha:.5f} M={self.target0.cap_M:.5f}",
            f"reinsurer target  alpha={self.target1.alpha:.5f} M={self.target1.cap_M:.5f}",
            f"posterior means   alpha={self.posterior_mean[0]:.5f} M={self.posterior_mean[1]:.5f}",
        ]
        if self.insurer is not None:
            lines.append(
                f"insurer: det H={self.insurer.hessian_det:.5g} projected={self.insurer.projected}"
            )
        if self.reinsurer is not None:
            lines.append(
                f"reinsurer: det H={self.reinsurer.hessian_det:.5g} "
                f"converged={self.reinsurer.converged} S(M)={self.reinsurer.cap_tail_prob:.3g}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------- parsing

_KEYS = {
    "claim", "data", "data.file", "data.kind", "data.contract",
    "sample.n", "sample.seed", "seed", "replications", "grid", "grid.tail", "output",
    "prior.theta", "prior.alpha", "prior.m", "weights",
    "target0", "target1", "posterior_mean",
    "table2.n", "table2.grid", "table2.rows",
    "sim.party", "sim.reps", "sim.contract", "sim.neighbors",
}
_PARTY_KEYS = {"beta", "loading", "lambda", "horizon", "wealth"}
_PARTY_FIELDS = {"lambda": "lam", "horizon": "horizon_t", "wealth": "initial_wealth"}


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from exc


def _pair(text: str, key: str) -> tuple[float, float]:
    vals = _floats(text, key)
    if len(vals) != 2:
        raise ConfigError(f"{key}: expected two numbers, got {text!r}")
    return vals[0], vals[1]


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _grid(text: str, key: str, tail: float) -> GridSpec:
    vals = [_int(v.strip(), key) for v in text.split(",") if v.strip()]
    if len(vals) == 1:
        vals *= 3
    if len(vals) != 3 or min(vals) < 1:
        raise ConfigError(f"{key}: expected one or three positive integers, got {text!r}")
    return GridSpec(*vals, tail=tail)


def _weights(text: str) -> tuple[BalancedWeights, ...]:
    if text.strip().lower() == "table1":
        return tuple(BalancedWeights(a, b, closed=True) for a, b in TABLE1_WEIGHTS)
    out = []
    for item in text.split(";"):
        if item.strip():
            a, b = _pair(item, "weights")
            out.append(BalancedWeights(a, b))
    return tuple(out)


def _table2_rows(text: str) -> tuple[Table2Spec, ...]:
    # rows separated by '|', fields by ';': claim; alpha prior; M prior
    rows = []
    for chunk in text.split("|"):
        parts = [p.strip() for p in chunk.split(";")]
        if len(parts) != 3:
            raise ConfigError(f"table2.rows: expected 'claim; alpha prior; M prior', got {chunk!r}")
        rows.append(Table2Spec(parse_claim_model(parts[0]), parse_prior(parts[1]), parse_prior(parts[2])))
    return tuple(rows)


def _read_data_file(path: Path) -> tuple[float, ...]:
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from exc
    values = []
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: not a number: {line!r}") from exc
        if not v >= 0:
            raise ConfigError(f"{path}:{n}: observations must be nonnegative")
        values.append(v)
    return tuple(values)


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from key-value text.

    Raises
    ------
    ConfigError
        On syntax errors, unknown or repeated keys, or invalid values.
    """
    base_dir = Path(base_dir)
    raw: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        party, _, sub = key.partition(".")
        known = key in _KEYS or (party in ("insurer", "reinsurer") and sub in _PARTY_KEYS)
        if not known:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {n}: key {key!r} given twice")
        raw[key] = value

    try:
        return _build(raw, base_dir)
    except ConfigError:
        raise
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(raw: dict[str, str], base_dir: Path) -> ExperimentConfig:
    kw: dict = {}
    if "claim" in raw:
        kw["claim_model"] = parse_claim_model(raw["claim"])
    for party in ("insurer", "reinsurer"):
        fields = {}
        for sub in _PARTY_KEYS:
            key = f"{party}.{sub}"
            if key in raw:
                fields[_PARTY_FIELDS.get(sub, sub)] = _floats(raw[key], key)[0]
        if fields:
            base = ExperimentConfig.__dataclass_fields__[f"{party}_cfg"].default
            kw[f"{party}_cfg"] = replace(base, **fields)

    if "prior.alpha" in raw:
        kw["alpha_prior"] = parse_prior(raw["prior.alpha"])
    if "prior.m" in raw:
        kw["m_prior"] = parse_prior(raw["prior.m"])
    if "prior.theta" in raw:
        kw["priors"] = PriorTriple(
            parse_prior(raw["prior.theta"]),
            kw.get("alpha_prior", ExperimentConfig.alpha_prior),
            kw.get("m_prior", ExperimentConfig.m_prior),
        )

    sources = [k for k in ("data", "data.file", "sample.n") if k in raw]
    if len(sources) > 1:
        raise ConfigError(f"give only one of data, data.file, sample.n (got {', '.join(sources)})")
    if "data" in raw:
        vals = _floats(raw["data"], "data")
        if any(not v >= 0 for v in vals):
            raise ConfigError("data: observations must be nonnegative")
        kw["data"] = tuple(vals)
    elif "data.file" in raw:
        path = Path(raw["data.file"])
        kw["data"] = _read_data_file(path if path.is_absolute() else base_dir / path)
    elif "sample.n" in raw:
        kw["data"] = None
        kw["sample_n"] = _int(raw["sample.n"], "sample.n")
        if kw["sample_n"] < 1:
            raise ConfigError("sample.n must be >= 1")
    if "sample.seed" in raw or "seed" in raw:
        kw["sample_seed"] = _int(raw.get("sample.seed", raw.get("seed")), "seed")
    if "data.kind" in raw:
        kw["data_kind"] = raw["data.kind"].lower()
    if "data.contract" in raw:
        kw["data_contract"] = ContractParams(*_pair(raw["data.contract"], "data.contract"))

    if "replications" in raw:
        kw["replications"] = _int(raw["replications"], "replications")
    tail = _floats(raw["grid.tail"], "grid.tail")[0] if "grid.tail" in raw else 1e-4
    if not 0 < tail < 0.5:
        raise ConfigError("grid.tail must lie in (0, 0.5)")
    kw["grid"] = _grid(raw.get("grid", "200"), "grid", tail)
    kw["table2_grid"] = _grid(raw.get("table2.grid", "100"), "table2.grid", tail)
    if "table2.n" in raw:
        kw["table2_n"] = _int(raw["table2.n"], "table2.n")
    if "table2.rows" in raw:
        kw["table2_rows"] = _table2_rows(raw["table2.rows"])
    if "output" in raw:
        kw["output_path"] = Path(raw["output"])
    if "weights" in raw:
        kw["weights"] = _weights(raw["weights"])
    for key in ("target0", "target1", "sim.contract"):
        if key in raw:
            kw[key.replace(".", "_")] = ContractParams(*_pair(raw[key], key))
    if "posterior_mean" in raw:
        kw["posterior_mean"] = _pair(raw["posterior_mean"], "posterior_mean")
    if "sim.party" in raw:
        kw["sim_party"] = raw["sim.party"].lower()
    if "sim.reps" in raw:
        kw["sim_reps"] = _int(raw["sim.reps"], "sim.reps")
    if "sim.neighbors" in raw:
        kw["sim_neighbors"] = raw["sim.neighbors"].lower() in ("1", "true", "yes", "on")
    return ExperimentConfig(**kw)


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


# ---------------------------------------------------------------- running


def replication_seed(master: int, index: int) -> int:
    """Seed of replication ``index``; depends only on ``(master, index)``."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


@contextmanager
def _step(name: str) -> Iterator[None]:
    try:
        yield
    except PropXLError as exc:
        exc.args = (f"{name}: {exc}",) + exc.args[1:]
        raise


def observations(cfg: ExperimentConfig) -> CededSample:
    """Ceded observations: inline/file data, or a seeded sample from the claim model."""
    if cfg.data is not None:
        values = np.asarray(cfg.data, dtype=float)
    else:
        values = cfg.claim_model.sample(cfg.sample_n, replication_seed(cfg.sample_seed, 0))
    if cfg.data_kind == "claims":
        return CededSample.from_claims(values, cfg.data_contract)
    return CededSample(tuple(values))


def table1_rows(
    weights: Sequence[BalancedWeights],
    target0: ContractParams,
    target1: ContractParams,
    posterior_mean: tuple[float, float],
) -> list[TableRow]:
    rows = []
    for w in weights:
        est = balanced_estimate(w, target0, target1, posterior_mean)
        rows.append(TableRow(w.w1, w.w2, w.residual, est.alpha, est.cap_M))
    return rows


def run_pipeline(cfg: ExperimentConfig, *, weights: Sequence[BalancedWeights] | None = None) -> PipelineReport:
    """Insurer target, reinsurer target, posterior means, balanced estimates.

    Any intermediate result given in the config (``target0``, ``target1``,
    ``posterior_mean``) is used as is instead of being computed.
    """
    ins = rei = post = None
    if cfg.target0 is None:
        with _step("solve-insurer"):
            ins = solve_insurer(cfg.claim_model, cfg.insurer_cfg)
        target0 = ins.params
    else:
        target0 = cfg.target0
    if cfg.target1 is None:
        with _step("solve-reinsurer"):
            rei = solve_reinsurer(cfg.claim_model, cfg.reinsurer_cfg)
        target1 = rei.params
    else:
        target1 = cfg.target1
    if cfg.posterior_mean is None:
        with _step("posterior"):
            post = posterior_summary(observations(cfg), cfg.claim_model, cfg.priors, cfg.grid)
        pm = (post.mean_alpha, post.mean_m)
    else:
        pm = cfg.posterior_mean
    if weights is None:
        weights = cfg.weights or tuple(BalancedWeights(a, b, closed=True) for a, b in TABLE1_WEIGHTS)
    with _step("combine"):
        rows = table1_rows(weights, target0, target1, pm)
    return PipelineReport(target0, target1, pm, rows, ins, rei, post)


def run_table2(cfg: ExperimentConfig, *, master_seed: int | None = None) -> list[Table2Row]:
    """Posterior-mean estimates over repeated samples for each Table 2 row.

    Replication ``r`` of every row draws ``table2_n`` claims with seed
    ``replication_seed(master, r)`` and treats them as ceded observations.
    The claim parameter enters as a point mass at its generating value.
    """
    master = cfg.sample_seed if master_seed is None else master_seed
    out = []
    for spec in cfg.table2_rows:
        priors = PriorTriple(PriorSpec("pointmass", (spec.claim.theta,)), spec.alpha_prior, spec.m_prior)
        est = np.empty((cfg.replications, 2))
        with _step(f"table2 {spec.family_label}"):
            for r in range(cfg.replications):
                z = spec.claim.sample(cfg.table2_n, replication_seed(master, r))
                post = posterior_summary(z, spec.claim, priors, cfg.table2_grid)
                est[r] = post.mean_alpha, post.mean_m
        sd = est.std(axis=0, ddof=1) if cfg.replications > 1 else np.zeros(2)
        out.append(
            Table2Row(
                spec.family_label, str(spec.alpha_prior), str(spec.m_prior),
                float(est[:, 0].mean()), float(sd[0]), float(est[:, 1].mean()), float(sd[1]),
                estimates=est,
            )
        )
    return out


# ---------------------------------------------------------------- CSV


def _fmt(v: float) -> str:
    if not math.isfinite(v):
        return str(v)
    text = f"{v:.5f}"
    return "0.00000" if text == "-0.00000" else text


def _csv(header: Sequence[str], rows: Sequence[Sequence], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def table1_csv(rows: Sequence[TableRow]) -> str:
    return _csv(
        ("w1", "w2", "residual_weight", "alpha_hat", "m_hat"),
        [(r.w1, r.w2, r.one_minus, r.alpha_hat, r.m_hat) for r in rows],
    )


def table2_csv(rows: Sequence[Table2Row], cfg: ExperimentConfig | None = None) -> str:
    comments = ["claim parameter prior: point mass at the generating value"]
    if cfg is not None:
        g = cfg.table2_grid
        comments.append(
            f"replications={cfg.replications} n={cfg.table2_n} "
            f"grid={g.n_theta}x{g.n_alpha}x{g.n_m} seed={cfg.sample_seed}"
        )
    return _csv(
        ("family", "prior_alpha", "prior_m", "mean_alpha", "sd_alpha", "mean_m", "sd_m"),
        [(r.family, r.prior_alpha, r.prior_m, r.mean_alpha, r.sd_alpha, r.mean_m, r.sd_m) for r in rows],
        comments,
    )
