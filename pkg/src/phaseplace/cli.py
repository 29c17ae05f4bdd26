"""Command-line entry point.

Subcommands::

    generate   synthetic corpus (requests, traces, ground truth)
    build      profile library and intensity models from a training corpus
    simulate   one policy over a test corpus
    compare    several policies (or a K / M sweep) on identical inputs

Every run writes ``manifest.json`` into its output directory.  A manifest can
be passed back with ``--config`` to repeat the run.  Exit codes: 0 success,
2 configuration error, 3 missing input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

from . import __version__
from .corpus_io import MissingInput, read_corpus, write_corpus
from .experiments import DEFAULT_POLICIES, Artifacts, build_artifacts, infer_labels, run_policy
from .generator import GeneratorConfig, generate_corpus, inject_noise, noisy_ids
from .intensity import BucketClassifier, BurstinessLookup, LookupRegressor
from .placement import POLICY_NAMES, PolicyConfig
from .profiles import ProfileLibrary
from .simulator import SimConfig, decisions_jsonl, metrics_csv
from .workload import ConfigError

log = logging.getLogger("phaseplace")

EXIT_CONFIG = 2
EXIT_MISSING = 3

PROFILES_FILE = "profiles.csv"
REGRESSOR_FILE = "intensity_model.csv"
BUCKETS_FILE = "bucket_model.csv"
BURSTY_FILE = "burstiness.csv"

# flag name -> PolicyConfig field
POLICY_FLAGS = {
    "slots": "K",
    "candidates": "candidates",
    "tau": "tau",
    "lcp_threshold": "lcp_threshold",
    "spatial_weight": "spatial_weight",
    "objective": "objective",
}
SIM_FLAGS = {"pods": "n_pods", "budget_factor": "budget_factor",
             "capacity_factor": "capacity_factor", "warmup": "warmup"}
SWEEP_KEYS = {"K": "K", "M": "candidates"}


def policy_to_dict(cfg: PolicyConfig) -> dict:
    d = asdict(cfg)
    d["objective"] = cfg.objective.value
    return d


def _from_dict(cls, d: dict, what: str):
    names = {f.name for f in fields(cls)}
    bad = set(d) - names
    if bad:
        raise ConfigError(f"unknown {what} config keys: {sorted(bad)}")
    d = dict(d)
    if "progress_checkpoints" in d:
        d["progress_checkpoints"] = tuple(d["progress_checkpoints"])
    return cls(**d)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"missing input: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON: {exc}") from exc


def _write_manifest(out: Path, command: str, **sections) -> None:
    manifest = {"command": command, "version": __version__, **sections}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


# --------------------------------------------------------------------------- generate


def resolve_generator(args, file_cfg: dict) -> tuple[GeneratorConfig, float, int]:
    base = dict(file_cfg.get("generator", file_cfg if "n_disks" in file_cfg else {}))
    for flag, key in (("disks", "n_disks"), ("seed", "seed"),
                      ("unknown_fraction", "unknown_fraction"), ("days", "days")):
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    cfg = GeneratorConfig.from_dict(base)
    noise = args.noise_inject if args.noise_inject is not None else file_cfg.get("noise_inject", 0.0)
    noise_seed = args.noise_seed if args.noise_seed is not None else file_cfg.get("noise_seed", cfg.seed)
    return cfg, float(noise), int(noise_seed)


def cmd_generate(args) -> int:
    cfg, noise, noise_seed = resolve_generator(args, _load_config(args.config))
    out = _outdir(args.out)
    corpus = generate_corpus(cfg)
    requests = corpus.requests
    injected = []
    if noise > 0:
        requests = inject_noise(corpus.requests, noise, noise_seed)
        injected = sorted(noisy_ids(corpus.requests, requests))
    write_corpus(out, corpus, requests)
    if injected:
        (out / "injected_ids.txt").write_text("".join(f"{i}\n" for i in injected))
    _write_manifest(out, "generate", generator=cfg.to_dict(), noise_inject=noise,
                    noise_seed=noise_seed)
    log.info("wrote %d disks to %s", len(requests), out)
    return 0


# --------------------------------------------------------------------------- build


def cmd_build(args) -> int:
    file_cfg = _load_config(args.config)
    K = args.slots if args.slots is not None else file_cfg.get("slots", 12)
    labels_from = args.labels or file_cfg.get("labels", "ground_truth")
    if labels_from not in ("ground_truth", "inferred"):
        raise ConfigError(f"unknown label source {labels_from!r}")
    corpus_dir = args.corpus or file_cfg.get("corpus")
    if corpus_dir is None:
        raise ConfigError("build needs --corpus")
    train = read_corpus(corpus_dir, need_ground_truth=labels_from == "ground_truth")
    labels = None if labels_from == "ground_truth" else infer_labels(train)
    art = build_artifacts(train, K, labels=labels)
    out = _outdir(args.out)
    art.library.save(out / PROFILES_FILE)
    art.regressor.save(out / REGRESSOR_FILE)
    art.buckets.save(out / BUCKETS_FILE)
    art.bursty.save(out / BURSTY_FILE)
    _write_manifest(out, "build", corpus=str(corpus_dir), slots=K, labels=labels_from)
    log.info("built %d class patterns at K=%d", len(art.library), K)
    return 0


def load_artifacts(directory: str | Path) -> Artifacts:
    d = Path(directory)
    for name in (PROFILES_FILE, REGRESSOR_FILE, BUCKETS_FILE, BURSTY_FILE):
        if not (d / name).exists():
            raise MissingInput(f"missing input: {d / name}")
    return Artifacts(
        library=ProfileLibrary.load(d / PROFILES_FILE),
        regressor=LookupRegressor.load(d / REGRESSOR_FILE),
        buckets=BucketClassifier.load(d / BUCKETS_FILE),
        bursty=BurstinessLookup.load(d / BURSTY_FILE),
    )


# --------------------------------------------------------------------------- simulate / compare


def resolve_configs(args, file_cfg: dict) -> tuple[PolicyConfig, SimConfig]:
    pol = dict(file_cfg.get("policy", {}))
    sim = dict(file_cfg.get("sim", {}))
    for flag, key in POLICY_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            pol[key] = value
    if getattr(args, "no_filter", False):
        pol["use_filter"] = False
    for flag, key in SIM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            sim[key] = value
    pcfg = _from_dict(PolicyConfig, pol, "policy")
    if getattr(args, "slots", None) is not None:
        sim["K"] = pcfg.K
    sim.setdefault("K", pcfg.K)
    scfg = _from_dict(SimConfig, sim, "sim")
    if scfg.K != pcfg.K:
        raise ConfigError(f"policy K={pcfg.K} and simulator K={scfg.K} disagree")
    return pcfg, scfg


def parse_sweep(text: str | None) -> tuple[str, list[int]] | None:
    if not text:
        return None
    key, sep, values = text.partition("=")
    if not sep or key not in SWEEP_KEYS:
        raise ConfigError(f"sweep must look like K=2,4,12 or M=2..8, got {text!r}")
    try:
        if ".." in values:
            lo, hi = values.split("..")
            vals = list(range(int(lo), int(hi) + 1))
        else:
            vals = [int(v) for v in values.split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values in {text!r}") from exc
    if not vals:
        raise ConfigError("empty sweep")
    return key, vals


def _inputs(args, file_cfg: dict):
    corpus_dir = args.corpus or file_cfg.get("corpus")
    art_dir = args.artifacts or file_cfg.get("artifacts")
    if corpus_dir is None or art_dir is None:
        raise ConfigError("need --corpus and --artifacts")
    train_dir = getattr(args, "train", None) or file_cfg.get("train")
    return corpus_dir, art_dir, train_dir


def _emit(out: Path, reports, decision_logs: bool) -> None:
    (out / "metrics.csv").write_text(metrics_csv(reports))
    (out / "report.json").write_text(
        json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True) + "\n")
    if decision_logs:
        for r in reports:
            (out / f"decisions_{r.policy}.jsonl").write_text(decisions_jsonl(r))


def _check_policies(names) -> list[str]:
    names = [n.strip() for n in names if n.strip()]
    unknown = [n for n in names if n not in POLICY_NAMES]
    if unknown or not names:
        raise ConfigError(f"unknown policies {unknown}; choose from {', '.join(POLICY_NAMES)}")
    return names


def _run_all(policies, corpus_dir, art_dir, train_dir, pcfg, scfg, sweep):
    test = read_corpus(corpus_dir)
    art = load_artifacts(art_dir)
    train = read_corpus(train_dir, need_ground_truth=True) if train_dir else None
    needed = {pcfg.K} if sweep is None or sweep[0] != "K" else set(sweep[1])
    if train is None and needed != {art.library.K}:
        raise MissingInput(f"profiles in {art_dir} are for K={art.library.K}; "
                           "pass --train to rebuild them for other slot counts")
    reports, settings = [], []
    if sweep is None:
        art_k = art.with_slots(pcfg.K, train)
        for name in policies:
            reports.append(run_policy(name, test, art_k, pcfg, scfg))
        settings.append({"policy": policy_to_dict(pcfg), "sim": scfg.to_dict()})
        return reports, settings
    key, values = sweep
    for v in values:
        field_name = SWEEP_KEYS[key]
        p_v = replace(pcfg, **{field_name: v})
        s_v = replace(scfg, K=p_v.K)
        art_v = art.with_slots(p_v.K, train)
        for name in policies:
            rep = run_policy(name, test, art_v, p_v, s_v)
            rep.policy = f"{name}@{key}={v}"
            reports.append(rep)
        settings.append({"label": f"{key}={v}", "policy": policy_to_dict(p_v),
                         "sim": s_v.to_dict()})
    return reports, settings


def cmd_simulate(args) -> int:
    file_cfg = _load_config(args.config)
    pcfg, scfg = resolve_configs(args, file_cfg)
    corpus_dir, art_dir, train_dir = _inputs(args, file_cfg)
    policy = _check_policies([args.policy or file_cfg.get("policies", ["tidal"])[0]])
    out = _outdir(args.out)
    reports, settings = _run_all(policy, corpus_dir, art_dir, train_dir, pcfg, scfg, None)
    _emit(out, reports, decision_logs=True)
    _write_manifest(out, "simulate", corpus=str(corpus_dir), artifacts=str(art_dir),
                    train=train_dir, policies=policy, policy=settings[0]["policy"],
                    sim=settings[0]["sim"])
    return 0


def cmd_compare(args) -> int:
    file_cfg = _load_config(args.config)
    pcfg, scfg = resolve_configs(args, file_cfg)
    corpus_dir, art_dir, train_dir = _inputs(args, file_cfg)
    names = args.policies.split(",") if args.policies else file_cfg.get("policies",
                                                                        list(DEFAULT_POLICIES))
    policies = _check_policies(names)
    sweep_text = args.sweep or file_cfg.get("sweep")
    sweep = parse_sweep(sweep_text)
    out = _outdir(args.out)
    reports, settings = _run_all(policies, corpus_dir, art_dir, train_dir, pcfg, scfg, sweep)
    _emit(out, reports, decision_logs=args.decisions)
    _write_manifest(out, "compare", corpus=str(corpus_dir), artifacts=str(art_dir),
                    train=train_dir, policies=policies, sweep=sweep_text,
                    policy=policy_to_dict(pcfg), sim=scfg.to_dict(), settings=settings)
    for r in reports:
        print(f"{r.policy:<20} otf={r.otf_final:.4f} p95={r.p95_duration_s}s "
              f"spatial={r.spatial_imbalance:.4f} temporal={r.temporal_imbalance:.4f}")
    return 0


# --------------------------------------------------------------------------- parser


def _policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="test corpus directory")
    p.add_argument("--artifacts", help="directory written by `build`")
    p.add_argument("--train", help="training corpus, needed when K differs from the artifacts")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON config or a previous manifest.json")
    p.add_argument("--slots", type=int, help="time slots per day (K)")
    p.add_argument("--candidates", type=int, help="spatial candidate count (M)")
    p.add_argument("--tau", type=float, help="confidence threshold")
    p.add_argument("--lcp-threshold", type=float)
    p.add_argument("--spatial-weight", type=float, help="weight of the intra-pod term")
    p.add_argument("--objective", choices=("delta_var", "abs_var", "peak"))
    p.add_argument("--no-filter", action="store_true", help="disable the regex noise filter")
    p.add_argument("--pods", type=int)
    p.add_argument("--budget-factor", type=float)
    p.add_argument("--capacity-factor", type=float)
    p.add_argument("--warmup", choices=("pending_disks", "unobserved_slots"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseplace", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic corpus")
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="JSON generator config")
    g.add_argument("--disks", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--days", type=int)
    g.add_argument("--unknown-fraction", type=float)
    g.add_argument("--noise-inject", type=float, help="fraction of requests with random metadata")
    g.add_argument("--noise-seed", type=int)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="build profiles and intensity models")
    b.add_argument("--corpus")
    b.add_argument("--out", required=True)
    b.add_argument("--config")
    b.add_argument("--slots", type=int)
    b.add_argument("--labels", choices=("ground_truth", "inferred"))
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("simulate", help="run one policy")
    _policy_flags(s)
    s.add_argument("--policy", help=" | ".join(POLICY_NAMES))
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run several policies on identical inputs")
    _policy_flags(c)
    c.add_argument("--policies", help="comma-separated; default " + ",".join(DEFAULT_POLICIES))
    c.add_argument("--sweep", help="K=2,4,12 or M=2..8")
    c.add_argument("--decisions", action="store_true", help="also write per-policy decision logs")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
