"""Command-line pipeline: ingest, annotate, score, simulate, analyze, pipeline.

Each stage reads the previous stage's output directory and writes its own,
with a ``manifest.json`` recording inputs, outputs and the resolved
configuration. Exit codes: 0 ok, 1 usage or I/O problem, 2 data that
violates its contract.

Directory layouts::

    raw input    <in>/<participant>/opnotes.txt [+ eve.jsonl] [, <in>/env_catalog.json]
    ingest       <out>/timelines/<participant>.jsonl, <out>/rejects/<participant>.jsonl
    annotate     <out>/actions/<participant>.jsonl
    simulate     <out>/actions/<agent>.jsonl, env_catalog.json, ground_truth.json [, raw/]
    score        <out>/observations/<participant>.jsonl, <out>/beliefs.jsonl
    analyze      <out>/report.json, table2.txt, table2.csv, histogram.csv, per_tactic_means.csv, config.json
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .annotate import Lexicon, RemoteAnnotatorConfig, annotate_lexicon, annotate_remote, extract_targets, fuse_netevents
from .ingest import FormatError, merge_timeline, parse_eve, parse_opnotes, read_timeline, write_timeline
from .models import MODELS, ContractError, EnvCatalog, ModelParams, TraitObservation, score_participant
from .records import SchemaError, dumps_canonical, iter_jsonl, load_attack_catalog, read_actions, write_actions, write_jsonl
from .report import AnalysisSettings, build_report, write_report
from .simulate import generate_cohort, load_sim_config, build_environment, write_env_catalog
from .traces import render_eve, render_opnotes

log = logging.getLogger("ambisense")

MANIFEST = "manifest.json"
DEFAULT_SIMULATION = {"n_agents": 20, "n_steps": 55, "theta": {"uniform": [0.0, 1.0]},
                      "lambda": {"uniform": [0.8, 2.5]}, "mu": 5.0}


class UsageError(Exception):
    """Bad arguments or missing input paths (exit code 1)."""


# -- configuration ------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    analysis: AnalysisSettings
    annotate: dict[str, Any]
    simulate: dict[str, Any]
    seed: int
    jobs: int

    def resolved(self) -> dict[str, Any]:
        """Everything that can change an output; ``jobs`` deliberately left out."""
        return {
            "model": self.params.to_dict(),
            "analysis": self.analysis.to_dict(),
            "annotate": self.annotate,
            "simulate": self.simulate,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps_canonical(self.resolved()).encode("utf-8")).hexdigest()


_CONFIG_SECTIONS = {"model", "analysis", "annotate", "simulate"}
_ANNOTATE_KEYS = {"lexicon", "fusion_window_seconds", "remote"}


def load_config(path: str | None, seed: int | None, jobs: int) -> RunConfig:
    raw: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            raw = json.loads(p.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config {path} is not JSON: {exc}") from None
        unknown = set(raw) - _CONFIG_SECTIONS
        if unknown:
            raise SchemaError(f"unknown config sections: {sorted(unknown)}")
    annotate = {"lexicon": None, "fusion_window_seconds": 60.0, "remote": None}
    extra = set(raw.get("annotate", {})) - _ANNOTATE_KEYS
    if extra:
        raise SchemaError(f"unknown annotate settings: {sorted(extra)}")
    annotate.update(raw.get("annotate", {}))
    if annotate["remote"] is not None:
        RemoteAnnotatorConfig.from_dict(annotate["remote"])
    simulate = dict(DEFAULT_SIMULATION)
    simulate.update(raw.get("simulate", {}))
    if seed is None:
        seed = int(simulate.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    simulate["seed"] = seed
    return RunConfig(
        params=ModelParams.from_dict(raw.get("model", {})),
        analysis=AnalysisSettings.from_dict(raw.get("analysis")),
        annotate=annotate,
        simulate=simulate,
        seed=seed,
        jobs=jobs,
    )


# -- manifests and helpers ------------------------------------------------------------------


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, subcommand: str, cfg: RunConfig, inputs: dict[str, Path], started: float) -> Path:
    outputs = _stage_files(out)
    manifest = {
        "tool": "ambisense",
        "version": __version__,
        "subcommand": subcommand,
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "inputs": {name: sha256_file(p) for name, p in sorted(inputs.items())},
        "outputs": {p.relative_to(out).as_posix(): sha256_file(p) for p in outputs},
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _stage_files(out: Path) -> list[Path]:
    """Files this stage wrote; subdirectories with their own manifest belong to other stages."""
    files = []
    for p in sorted(out.iterdir()):
        if p.is_file() and p.name != MANIFEST:
            files.append(p)
        elif p.is_dir() and not (p / MANIFEST).exists():
            files.extend(_stage_files(p))
    return files


def _prepare_out(out: str | Path | None, default: str) -> Path:
    path = Path(out if out is not None else default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_dir(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} not found: {p}")
    return p


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _participants(stage_dir: Path, sub: str, suffix: str = ".jsonl") -> list[tuple[str, Path]]:
    d = stage_dir / sub
    if not d.is_dir():
        raise UsageError(f"{stage_dir} has no {sub}/ directory")
    return [(p.name[: -len(suffix)], p) for p in sorted(d.glob(f"*{suffix}"))]


# -- stages ----------------------------------------------------------------------------------


def _ingest_one(item: tuple[str, Path | None, Path | None]):
    pid, notes_path, eve_path = item
    notes, note_rejects = [], []
    if notes_path is not None:
        try:
            notes, note_rejects = parse_opnotes(notes_path.read_text("utf-8"), pid)
        except FormatError as exc:
            raise FormatError(f"{notes_path}: {exc}") from None
    events, eve_rejects = [], []
    if eve_path is not None:
        try:
            events, eve_rejects = parse_eve(eve_path.read_text("utf-8"))
        except FormatError as exc:
            raise FormatError(f"{eve_path}: {exc}") from None
    return pid, merge_timeline(notes, events, pid), note_rejects, eve_rejects


def run_ingest(in_dir: str | Path, out: Path, cfg: RunConfig) -> dict[str, Any]:
    started = time.monotonic()
    root = _require_dir(in_dir, "input directory")
    items, inputs = [], {}
    for pdir in sorted(p for p in root.iterdir() if p.is_dir()):
        notes = pdir / "opnotes.txt"
        eve = pdir / "eve.jsonl"
        notes = notes if notes.is_file() else None
        eve = eve if eve.is_file() else None
        if notes is None and eve is None:
            continue
        for f in (notes, eve):
            if f is not None:
                inputs[f.relative_to(root).as_posix()] = f
        items.append((pdir.name, notes, eve))
    if not items:
        raise UsageError(f"no <participant>/opnotes.txt or eve.jsonl under {root}")
    counts = {"participants": 0, "notes": 0, "events": 0, "rejects": 0}
    for pid, timeline, nrej, erej in _map(_ingest_one, items, cfg.jobs):
        write_timeline(out / "timelines" / f"{pid}.jsonl", timeline)
        rows = [{"source": "opnotes", **r.to_dict()} for r in nrej] + [{"source": "eve", **r.to_dict()} for r in erej]
        write_jsonl(out / "rejects" / f"{pid}.jsonl", rows)
        counts["participants"] += 1
        counts["notes"] += len(timeline.notes)
        counts["events"] += len(timeline.events)
        counts["rejects"] += len(rows)
    catalog = root / "env_catalog.json"
    if catalog.is_file():
        inputs["env_catalog.json"] = catalog
        shutil.copyfile(catalog, out / "env_catalog.json")
    write_manifest(out, "ingest", cfg, inputs, started)
    log.info("ingest: %(participants)d participants, %(notes)d notes, %(events)d events, %(rejects)d rejects", counts)
    return counts


def _lexicon(cfg: RunConfig) -> Lexicon:
    return Lexicon.load(cfg.annotate.get("lexicon"))


def _annotate_one(item):
    path, lexicon_path, window = item
    lexicon = Lexicon.load(lexicon_path)
    timeline = read_timeline(path)
    records, skipped = annotate_lexicon(timeline, lexicon)
    records = fuse_netevents(extract_targets(records), timeline.events, lexicon, window)
    return timeline.participant_id, records, skipped


def run_annotate(in_dir: str | Path, out: Path, cfg: RunConfig) -> dict[str, Any]:
    started = time.monotonic()
    stage = _require_dir(in_dir, "ingest directory")
    parts = _participants(stage, "timelines")
    window = float(cfg.annotate.get("fusion_window_seconds", 60.0))
    lexicon_path = cfg.annotate.get("lexicon")
    inputs = {f"timelines/{p.name}": p for _, p in parts}
    if lexicon_path is not None:
        inputs["lexicon"] = Path(lexicon_path)
    counts = {"participants": 0, "records": 0, "skipped": 0, "fallback_batches": 0}
    remote = cfg.annotate.get("remote")
    if remote is None:
        results = _map(_annotate_one, [(p, lexicon_path, window) for _, p in parts], cfg.jobs)
    else:
        rcfg = RemoteAnnotatorConfig.from_dict(remote)
        lexicon = _lexicon(cfg)
        results = []
        for _, p in parts:
            timeline = read_timeline(p)
            records, fell = annotate_remote(timeline, rcfg, lexicon)
            counts["fallback_batches"] += fell
            records = fuse_netevents(extract_targets(records), timeline.events, lexicon, window)
            results.append((timeline.participant_id, records, len(timeline.notes) - len(records)))
    for (name, _), (pid, records, skipped) in zip(parts, results):
        write_actions(out / "actions" / f"{name}.jsonl", records)
        counts["participants"] += 1
        counts["records"] += len(records)
        counts["skipped"] += skipped
    catalog = stage / "env_catalog.json"
    if catalog.is_file():
        inputs["env_catalog.json"] = catalog
        shutil.copyfile(catalog, out / "env_catalog.json")
    write_manifest(out, "annotate", cfg, inputs, started)
    log.info("annotate: %(records)d records, %(skipped)d notes unmatched", counts)
    return counts


def _find_env(stage: Path, env_path: str | None) -> Path:
    if env_path is not None:
        p = Path(env_path)
        if not p.is_file():
            raise UsageError(f"environment catalog not found: {p}")
        return p
    p = stage / "env_catalog.json"
    if not p.is_file():
        raise UsageError(f"no env_catalog.json in {stage}; pass --env")
    return p


def _score_one(item):
    name, path, env_dict, params_dict, models = item
    env = EnvCatalog.from_dict(env_dict)
    params = ModelParams.from_dict(params_dict)
    records = read_actions(path, load_attack_catalog())
    if not records:
        return name, None
    return name, score_participant(records, env, params, models)


def run_score(in_dir: str | Path, out: Path, cfg: RunConfig, models: Sequence[str], env_path: str | None = None) -> dict[str, Any]:
    started = time.monotonic()
    stage = _require_dir(in_dir, "actions directory")
    parts = _participants(stage, "actions")
    env_file = _find_env(stage, env_path)
    try:
        env_dict = json.loads(env_file.read_text("utf-8"))
        EnvCatalog.from_dict(env_dict)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{env_file}: invalid environment catalog ({exc})") from None
    items = [(name, p, env_dict, cfg.params.to_dict(), tuple(models)) for name, p in parts]
    beliefs = []
    n_obs = 0
    for name, scores in _map(_score_one, items, cfg.jobs):
        obs = [] if scores is None else scores.observations
        write_jsonl(out / "observations" / f"{name}.jsonl", (o.to_dict() for o in obs))
        n_obs += len(obs)
        if scores is None:
            continue
        row: dict[str, Any] = {"participant_id": scores.participant_id, "n_actions": len(obs) // len(models)}
        if scores.ambiguity is not None:
            row["ambiguity"] = {"alpha": scores.ambiguity.alpha, "beta": scores.ambiguity.beta,
                                "trait_probability": scores.ambiguity.trait_probability,
                                "hedging_events": len(scores.hedging_events)}
        if scores.loss is not None:
            row["loss"] = {"trait_probability": scores.loss.trait_probability,
                           "posterior_mean": scores.loss.posterior_mean,
                           "weights": [float(w) for w in scores.loss.weights]}
        beliefs.append(row)
    write_jsonl(out / "beliefs.jsonl", beliefs)
    inputs = {f"actions/{p.name}": p for _, p in parts}
    inputs["env_catalog.json"] = env_file
    write_manifest(out, "score", cfg, inputs, started)
    log.info("score: %d participants, %d observations", len(beliefs), n_obs)
    return {"participants": len(beliefs), "observations": n_obs}


def read_observations(stage: Path) -> list[TraitObservation]:
    obs = []
    for _, p in _participants(stage, "observations"):
        for lineno, d in iter_jsonl(p):
            try:
                obs.append(TraitObservation.from_dict(d))
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{p}: invalid observation ({exc})", line=lineno) from None
    return obs


def run_analyze(in_dir: str | Path, out: Path, cfg: RunConfig) -> dict[str, Any]:
    started = time.monotonic()
    stage = _require_dir(in_dir, "score directory")
    obs = read_observations(stage)
    if not obs:
        raise SchemaError(f"no observations under {stage}/observations")
    report = build_report(obs, cfg.analysis, cfg.resolved())
    write_report(report, out)
    inputs = {f"observations/{p.name}": p for _, p in _participants(stage, "observations")}
    write_manifest(out, "analyze", cfg, inputs, started)
    log.info("analyze: %d observations from %d participants", len(obs), report.n_participants)
    return report.to_dict()


def run_simulate(out: Path, cfg: RunConfig, env_config: str | None = None, render: bool = False) -> dict[str, Any]:
    started = time.monotonic()
    spec = dict(cfg.simulate)
    env = build_environment(load_sim_config(env_config), cfg.seed)
    cohort = generate_cohort(spec, env)
    cohort.write(out)
    if render:
        raw = out / "raw"
        for i, (pid, recs) in enumerate(cohort.actions.items()):
            (raw / pid).mkdir(parents=True, exist_ok=True)
            (raw / pid / "opnotes.txt").write_text(render_opnotes(recs, cfg.seed + i), encoding="utf-8", newline="\n")
            (raw / pid / "eve.jsonl").write_text(
                render_eve(recs, f"10.99.0.{i % 250 + 1}", cfg.seed + i), encoding="utf-8", newline="\n")
        write_env_catalog(raw / "env_catalog.json", env.catalog())
    inputs = {"sim_environment.json": Path(env_config)} if env_config else {}
    write_manifest(out, "simulate", cfg, inputs, started)
    log.info("simulate: %d agents, %d actions", len(cohort.actions), cohort.n_observations)
    return {"agents": len(cohort.actions), "actions": cohort.n_observations}


def demo_input_dir() -> Path:
    return Path(str(resources.files("ambisense.data").joinpath("demo")))


def run_pipeline(in_dir: str | Path | None, out: Path, cfg: RunConfig, models: Sequence[str], env_path: str | None = None) -> dict[str, Any]:
    started = time.monotonic()
    root = demo_input_dir() if in_dir is None else _require_dir(in_dir, "input directory")
    result = {
        "ingest": run_ingest(root, _prepare_out(out / "ingest", ""), cfg),
        "annotate": run_annotate(out / "ingest", _prepare_out(out / "annotate", ""), cfg),
    }
    env = env_path
    if env is None and not (out / "annotate" / "env_catalog.json").is_file():
        raise UsageError("no env_catalog.json next to the raw inputs; pass --env")
    result["score"] = run_score(out / "annotate", _prepare_out(out / "score", ""), cfg, models, env)
    report = run_analyze(out / "score", _prepare_out(out / "analyze", ""), cfg)
    result["analyze"] = {"models": report["models"], "n_participants": report["n_participants"]}
    inputs = {f.relative_to(root).as_posix(): f for f in sorted(root.rglob("*")) if f.is_file()}
    write_manifest(out, "pipeline", cfg, inputs, started)
    return result


# -- argument parsing --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="JSON config file")
    p.add_argument("--jobs", metavar="N", type=int, default=argparse.SUPPRESS if suppress else 1,
                   help="worker processes for per-participant work (output does not depend on N)")
    p.add_argument("--seed", metavar="U64", type=int, default=d, help="seed for simulation")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory")
    p.add_argument("--log-level", default=argparse.SUPPRESS if suppress else "INFO",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def _model_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=[*MODELS, "both"], default="both", help="which bias model(s) to score")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ambisense", description="Infer ambiguity- and loss-aversion traits from red-team logs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="parse OpNotes and EVE logs into timelines")
    p.add_argument("input", help="directory of <participant>/opnotes.txt and eve.jsonl")

    p = sub.add_parser("annotate", help="map timeline notes to ATT&CK action records")
    p.add_argument("input", help="ingest output directory")

    p = sub.add_parser("score", help="run the bias models over action records")
    p.add_argument("input", help="annotate or simulate output directory")
    p.add_argument("--env", metavar="PATH", help="environment catalog (default: <input>/env_catalog.json)")
    _model_arg(p)

    p = sub.add_parser("simulate", help="generate a synthetic attacker cohort with known traits")
    p.add_argument("--agents", type=int, help="number of agents")
    p.add_argument("--steps", type=int, help="actions per agent")
    p.add_argument("--theta", type=float, help="ambiguity weight for every agent (1 = fully averse)")
    p.add_argument("--lambda", dest="lam", type=float, help="loss coefficient for every agent")
    p.add_argument("--mu", type=float, help="choice sharpness for every agent")
    p.add_argument("--env-config", metavar="PATH", help="simulation environment config (default: bundled)")
    p.add_argument("--render", action="store_true", help="also write raw OpNotes/EVE logs under <out>/raw")

    p = sub.add_parser("analyze", help="compare the models: Table-2 summary, tests, CSVs")
    p.add_argument("input", help="score output directory")

    p = sub.add_parser("pipeline", help="ingest, annotate, score and analyze in one go")
    p.add_argument("input", nargs="?", help="raw input directory (default: the bundled demo cohort)")
    p.add_argument("--env", metavar="PATH", help="environment catalog (default: <input>/env_catalog.json)")
    _model_arg(p)

    for sp in sub.choices.values():
        _global_flags(sp, suppress=True)
    return parser


def _models(args) -> tuple[str, ...]:
    return tuple(MODELS) if args.model == "both" else (args.model,)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = load_config(args.config, args.seed, args.jobs)
        if getattr(args, "input", None) is not None:
            # fail before creating an output directory
            _require_dir(args.input, "input directory")
        out = _prepare_out(args.out, f"ambisense-{args.command}")
        cmd = args.command
        if cmd == "ingest":
            run_ingest(args.input, out, cfg)
        elif cmd == "annotate":
            run_annotate(args.input, out, cfg)
        elif cmd == "score":
            run_score(args.input, out, cfg, _models(args), args.env)
        elif cmd == "simulate":
            overrides = {"n_agents": args.agents, "n_steps": args.steps, "theta": args.theta,
                         "lambda": args.lam, "mu": args.mu}
            sim = dict(cfg.simulate)
            sim.update({k: v for k, v in overrides.items() if v is not None})
            if any(v is not None for k, v in overrides.items() if k != "n_steps"):
                sim.pop("groups", None)
            cfg = RunConfig(cfg.params, cfg.analysis, cfg.annotate, sim, cfg.seed, cfg.jobs)
            run_simulate(out, cfg, args.env_config, args.render)
        elif cmd == "analyze":
            run_analyze(args.input, out, cfg)
            sys.stdout.write((out / "table2.txt").read_text("utf-8"))
        elif cmd == "pipeline":
            run_pipeline(args.input, out, cfg, _models(args), args.env)
            sys.stdout.write((out / "analyze" / "table2.txt").read_text("utf-8"))
    except UsageError as exc:
        log.error("%s", exc)
        return 1
    except (FormatError, SchemaError, ContractError) as exc:
        log.error("data error: %s", exc)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        log.error("I/O error: %s", exc)
        return 1
    except (ValueError, KeyError, FloatingPointError) as exc:
        log.error("data error: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
