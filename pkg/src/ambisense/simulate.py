"""Synthetic biased attackers with known ground truth.

The generative agent is deliberately built from different machinery than
the inference heuristics: unknown success probabilities are intervals, and
the agent evaluates them alpha-maxmin style, weighting the worst case by its
ambiguity aversion ``theta``. Loss aversion enters through the same
gain/detection utility the loss sensor assumes.

Randomness: every stream is ``numpy.random.Philox`` (a counter-based
generator) keyed by ``(seed, stream_id)`` packed into a 128-bit key, so a run
is reproducible from the seed alone and identical across platforms. Only
``Generator.random``, ``integers`` and ``permutation`` are used.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .models.contexts import EnvCatalog
from .records import ActionRecord, format_timestamp, parse_timestamp, validate_record, write_actions

ENV_STREAM = 0x454E56
AGENT_STREAM = 0x41_0000
PARAM_STREAM = 0x50_0000


def make_rng(seed: int, stream: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=(stream << 64) | seed))


def load_sim_config(path: str | Path | None = None) -> dict[str, Any]:
    if path is None:
        text = resources.files("ambisense.data").joinpath("sim_environment.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class SimHost:
    host_id: str
    service_kind: str  # "documented" | "custom"
    value: float
    loss: float
    p_detect: float
    complexity: float
    p_success: float | None = None
    p_lo: float | None = None
    p_hi: float | None = None
    true_p: float = 0.5

    def __post_init__(self):
        if self.service_kind == "documented":
            if self.p_success is None:
                raise ValueError(f"documented host {self.host_id} needs a known p_success")
        elif self.service_kind == "custom":
            if self.p_lo is None or self.p_hi is None or not 0.0 <= self.p_lo <= self.p_hi <= 1.0:
                raise ValueError(f"custom host {self.host_id} needs 0 <= p_lo <= p_hi <= 1")
        else:
            raise ValueError(f"unknown service kind {self.service_kind!r}")


@dataclass(frozen=True)
class SimTechnique:
    technique_id: str
    tactic: str
    complexity: float
    style: str


@dataclass
class SimEnvironment:
    hosts: list[SimHost]
    techniques: list[SimTechnique]
    styles: dict[str, dict[str, float]]
    schedule: list[dict[str, Any]]
    host_pools: dict[str, str] = field(default_factory=dict)
    offered_hosts: int = 4
    step_gap_seconds: tuple[int, int] = (120, 480)
    start: datetime = field(default_factory=lambda: parse_timestamp("2024-03-01T09:00:00Z"))

    def techniques_for(self, tactic: str) -> list[SimTechnique]:
        return [t for t in self.techniques if t.tactic == tactic]

    def catalog(self) -> EnvCatalog:
        """Inference-side view: custom hosts lose their probability information."""
        return EnvCatalog.from_dict({
            "version": "sim-1",
            "techniques": [asdict(t) for t in self.techniques],
            "targets": [
                {
                    "target_id": h.host_id,
                    "service_kind": h.service_kind,
                    "value": h.value,
                    "loss": h.loss,
                    "p_success": h.p_success,
                    "p_detect": h.p_detect,
                    "complexity": h.complexity,
                }
                for h in self.hosts
            ],
            "styles": self.styles,
        })

    def to_dict(self) -> dict[str, Any]:
        return {
            "hosts": [asdict(h) for h in self.hosts],
            "techniques": [asdict(t) for t in self.techniques],
            "styles": self.styles,
            "schedule": self.schedule,
            "host_pools": self.host_pools,
            "offered_hosts": self.offered_hosts,
            "step_gap_seconds": list(self.step_gap_seconds),
            "start": format_timestamp(self.start),
        }


def _uniform(rng: np.random.Generator, bounds: Sequence[float]) -> float:
    lo, hi = bounds
    return float(lo + (hi - lo) * rng.random())


def host_address(i: int) -> str:
    return f"10.0.{i // 20 + 1}.{10 + i % 20}"


def build_environment(config: dict[str, Any] | None = None, seed: int = 0) -> SimEnvironment:
    """Draw host parameters from the ranges in ``config`` (bundled defaults if None)."""
    cfg = config or load_sim_config()
    rng = make_rng(seed, ENV_STREAM)
    n = int(cfg["n_hosts"])
    n_doc = int(round(cfg["documented_fraction"] * n))
    kinds = np.array(["documented"] * n_doc + ["custom"] * (n - n_doc))[rng.permutation(n)]
    hosts = []
    for i, kind in enumerate(kinds):
        r = cfg[kind]
        value, loss = _uniform(rng, r["value"]), _uniform(rng, r["loss"])
        p_detect, complexity = _uniform(rng, r["p_detect"]), _uniform(rng, r["complexity"])
        if kind == "documented":
            p = _uniform(rng, r["p_success"])
            hosts.append(SimHost(host_address(i), "documented", value, loss, p_detect, complexity, p_success=p, true_p=p))
        else:
            w = _uniform(rng, r["half_width"])
            lo, hi = max(0.0, 0.5 - w), min(1.0, 0.5 + w)
            true_p = lo + (hi - lo) * rng.random()
            hosts.append(SimHost(host_address(i), "custom", value, loss, p_detect, complexity, p_lo=lo, p_hi=hi, true_p=float(true_p)))
    techniques = [SimTechnique(**t) for t in cfg["techniques"]]
    return SimEnvironment(
        hosts=hosts,
        techniques=techniques,
        styles={k: dict(v) for k, v in cfg["styles"].items()},
        schedule=list(cfg["schedule"]),
        host_pools=dict(cfg.get("host_pools", {})),
        offered_hosts=int(cfg.get("offered_hosts", 4)),
        step_gap_seconds=tuple(cfg.get("step_gap_seconds", (120, 480))),
        start=parse_timestamp(cfg.get("start", "2024-03-01T09:00:00Z")),
    )


@dataclass(frozen=True)
class SimAgentParams:
    lambda_true: float = 1.0
    theta_true: float = 0.5
    mu: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.lambda_true < 0:
            raise ValueError("lambda_true must be >= 0")
        if not 0.0 <= self.theta_true <= 1.0:
            raise ValueError("theta_true must lie in [0, 1]")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimOption:
    option_id: str
    gain: float
    loss: float
    p_detect: float
    p_success: float | None = None
    p_lo: float | None = None
    p_hi: float | None = None
    host_id: str = ""
    technique_id: str = ""
    tactic: str = "Unknown"
    style: str = "unknown"
    true_p: float = 0.5


def agent_utility(option: SimOption, params: SimAgentParams) -> float:
    """Gain/detection utility; interval probabilities are valued alpha-maxmin."""

    def eps(p: float) -> float:
        return p * option.gain - params.lambda_true * option.p_detect * option.loss

    if option.p_success is not None:
        return eps(option.p_success)
    return params.theta_true * eps(option.p_lo) + (1.0 - params.theta_true) * eps(option.p_hi)


def _option(host: SimHost, tech: SimTechnique, styles: dict[str, dict[str, float]]) -> SimOption:
    st = styles.get(tech.style, {})
    return SimOption(
        option_id=f"{host.host_id}:{tech.technique_id}",
        gain=host.value * st.get("gain_mult", 1.0),
        loss=host.loss,
        p_detect=min(1.0, max(0.0, host.p_detect + st.get("detect_add", 0.0))),
        p_success=host.p_success,
        p_lo=host.p_lo,
        p_hi=host.p_hi,
        host_id=host.host_id,
        technique_id=tech.technique_id,
        tactic=tech.tactic,
        style=tech.style,
        true_p=host.true_p,
    )


def softmax_choice(utilities: Sequence[float], mu: float, u: float) -> tuple[int, np.ndarray]:
    """Index drawn from softmax(mu * utilities) by inverting the CDF at ``u``."""
    if len(utilities) == 0:
        raise ValueError("empty option set")
    x = mu * np.asarray(utilities, dtype=float)
    w = np.exp(x - x.max())
    p = w / w.sum()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, len(p) - 1), p


def _tactic_at(schedule: list[dict[str, Any]], frac: float, u: float) -> str:
    phase = next((ph for ph in schedule if frac < ph["until"]), schedule[-1])
    names = list(phase["weights"])
    w = np.array([phase["weights"][k] for k in names], dtype=float)
    cdf = np.cumsum(w / w.sum())
    return names[min(int(np.searchsorted(cdf, u, side="right")), len(names) - 1)]


def _offer(env: SimEnvironment, tactic: str, visited: set[int], rng: np.random.Generator) -> list[int]:
    """Host indices offered at one step.

    A tactic's pool is ``"unvisited"`` (fresh hosts, as when probing),
    ``"visited"`` (footholds already touched), ``"documented"`` / ``"custom"``
    (one service kind only) or ``"any"``; pools smaller than
    ``offered_hosts`` fall back to all hosts.
    """
    n = len(env.hosts)
    k = min(env.offered_hosts, n)
    pool_kind = env.host_pools.get(tactic, "any")
    if pool_kind == "unvisited":
        pool = [i for i in range(n) if i not in visited]
    elif pool_kind == "visited":
        pool = sorted(visited)
    elif pool_kind in ("documented", "custom"):
        pool = [i for i in range(n) if env.hosts[i].service_kind == pool_kind]
    else:
        pool = list(range(n))
    if len(pool) < k:
        pool = list(range(n))
    perm = rng.permutation(len(pool))[:k]
    return sorted(pool[j] for j in perm)


_VERBS = {
    "aggressive": "hit {host} with {tech} (loud)",
    "stealthy": "quietly worked {host} via {tech}",
}


def run_episode(
    env: SimEnvironment,
    params: SimAgentParams,
    n_steps: int,
    participant_id: str = "agent-000",
) -> tuple[list[ActionRecord], dict[str, Any]]:
    """Simulate one attacker; returns its action records and a ground-truth sidecar."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = make_rng(params.seed, AGENT_STREAM)
    t = env.start
    records: list[ActionRecord] = []
    steps = []
    visited: set[int] = set()
    host_index = {h.host_id: i for i, h in enumerate(env.hosts)}
    for step in range(n_steps):
        tactic = _tactic_at(env.schedule, step / n_steps, rng.random())
        techs = env.techniques_for(tactic)
        offered = _offer(env, tactic, visited, rng)
        options = [_option(env.hosts[h], tech, env.styles) for h in offered for tech in techs]
        if not options:
            raise ValueError(f"no options available at step {step} (tactic {tactic})")
        utilities = [agent_utility(o, params) for o in options]
        idx, probs = softmax_choice(utilities, params.mu, rng.random())
        chosen = options[idx]
        visited.add(host_index[chosen.host_id])
        success = bool(rng.random() < chosen.true_p)
        gap_lo, gap_hi = env.step_gap_seconds
        t = t + timedelta(seconds=int(rng.integers(gap_lo, gap_hi + 1)))
        outcome = "success" if success else "failure"
        text = _VERBS[chosen.style].format(host=chosen.host_id, tech=chosen.technique_id) + f" -> {outcome}"
        rec = ActionRecord(
            timestamp=t,
            participant_id=participant_id,
            technique_id=chosen.technique_id,
            tactic=chosen.tactic,
            target=chosen.host_id,
            action_style=chosen.style,
            outcome=outcome,
            source_excerpt=text[:240],
            confidence=1.0,
        )
        validate_record(rec)
        records.append(rec)
        steps.append({
            "step": step,
            "chosen": chosen.option_id,
            "chosen_kind": "custom" if chosen.p_success is None else "documented",
            "forgone": [o.option_id for i, o in enumerate(options) if i != idx],
            "probabilities": [round(float(p), 12) for p in probs],
        })
    sidecar = {
        "participant_id": participant_id,
        "lambda_true": params.lambda_true,
        "theta_true": params.theta_true,
        "mu": params.mu,
        "seed": params.seed,
        "steps": steps,
    }
    return records, sidecar


def _draw(spec: Any, rng: np.random.Generator) -> float:
    if isinstance(spec, dict):
        if "uniform" in spec:
            return _uniform(rng, spec["uniform"])
        if "choice" in spec:
            vals = spec["choice"]
            return float(vals[int(rng.integers(len(vals)))])
        raise ValueError(f"unsupported parameter distribution {spec!r}")
    return float(spec)


@dataclass
class Cohort:
    actions: dict[str, list[ActionRecord]]
    ground_truth: dict[str, Any]
    env: SimEnvironment

    @property
    def n_observations(self) -> int:
        return sum(len(v) for v in self.actions.values())

    def write(self, out_dir: str | Path) -> list[Path]:
        """``<out>/actions/<agent_id>.jsonl`` per agent, plus ``ground_truth.json`` and ``env_catalog.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for agent_id, recs in self.actions.items():
            p = out / "actions" / f"{agent_id}.jsonl"
            write_actions(p, recs)
            written.append(p)
        gt = out / "ground_truth.json"
        gt.write_text(json.dumps(self.ground_truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        written.append(gt)
        written.append(write_env_catalog(out / "env_catalog.json", self.env.catalog()))
        return written


def write_env_catalog(path: str | Path, catalog: EnvCatalog) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(catalog.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def generate_cohort(spec: dict[str, Any], env: SimEnvironment | None = None) -> Cohort:
    """Simulate a cohort.

    ``spec`` keys: ``seed``, ``n_steps`` (default 55), and either ``groups``
    (list of ``{"n", "theta", "lambda", "mu"}``) or ``n_agents`` with
    ``theta`` / ``lambda`` / ``mu`` given as constants or as
    ``{"uniform": [lo, hi]}`` / ``{"choice": [...]}``.
    """
    seed = int(spec.get("seed", 0))
    env = env or build_environment(spec.get("environment"), seed)
    n_steps = int(spec.get("n_steps", 55))
    if "groups" in spec:
        groups = spec["groups"]
    else:
        groups = [{"n": spec.get("n_agents", 1), "theta": spec.get("theta", 0.5),
                   "lambda": spec.get("lambda", 1.0), "mu": spec.get("mu", 5.0)}]
    if sum(int(g["n"]) for g in groups) < 1:
        raise ValueError("cohort needs at least one agent")

    actions: dict[str, list[ActionRecord]] = {}
    agents = []
    i = 0
    for gi, g in enumerate(groups):
        for _ in range(int(g["n"])):
            prng = make_rng(seed, PARAM_STREAM + i)
            agent_seed = (seed * 1_000_003 + i) % 2**64
            params = SimAgentParams(
                lambda_true=_draw(g.get("lambda", 1.0), prng),
                theta_true=_draw(g.get("theta", 0.5), prng),
                mu=_draw(g.get("mu", 5.0), prng),
                seed=agent_seed,
            )
            agent_id = f"agent-{i:03d}"
            recs, side = run_episode(env, params, n_steps, agent_id)
            side["group"] = gi
            actions[agent_id] = recs
            agents.append(side)
            i += 1
    ground_truth = {
        "seed": seed,
        "n_steps": n_steps,
        "spec": spec,
        "rng": "numpy Philox4x64-10, key = (stream << 64) | seed",
        "environment": env.to_dict(),
        "agents": agents,
    }
    return Cohort(actions, ground_truth, env)
