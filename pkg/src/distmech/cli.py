"""Command-line experiment driver.

Verbs::

    distmech tune --config CFG [--out DIR]
    distmech solve --config CFG [--out DIR]
    distmech learn --config CFG --out DIR
    distmech reproduce-figures --out DIR [--config CFG]
    distmech graph --config CFG --out FILE

Exit codes: 0 success, 2 tuning failure, 3 a dynamic did not converge
within ``max_rounds``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DistMechError, InsufficientData, TuningFailed
from .graph import (
    Graph,
    build_routing,
    format_edge_list,
    gen_directed_cycle,
    gen_erdos_renyi,
    gen_full_binary_tree,
    read_edge_list,
)
from .learning import LearningDynamic, Trajectory, fit_rate, run
from .mechanism import MessageProfile
from .model import (
    UtilityProfile,
    kkt_residual_private,
    kkt_residual_public,
    load_profile,
    sample_quadratic_profile,
    solve_private,
    solve_public,
)
from .tuning import TunedParams, build_mechanism, certify_contraction, tune

log = logging.getLogger("distmech")

EXIT_OK = 0
EXIT_TUNING = 2
EXIT_NOT_CONVERGED = 3

# absolute distance at which the relative distance is reported
REPORT_THRESHOLD = {"private": 1e-3, "public": 1e-5}


@dataclass
class ExperimentConfig:
    problem: str = "private"
    graph: dict = field(default_factory=lambda: {"kind": "binary_tree"})
    n_agents: int = 31
    eta: float = 25.0
    theta_range: list | None = None
    sigma_range: list = field(default_factory=lambda: [10.0, 20.0])
    capacity: float | None = None
    profile_path: str | None = None
    dynamics: list = field(default_factory=lambda: [{"kind": "exp_weighted"}, {"kind": "k_period", "k": 10}])
    seeds: dict = field(default_factory=lambda: {"profile": 0, "graph": 0, "init": 0})
    max_rounds: int = 10_000
    tol: float | None = None
    margin: float = 0.1
    refine: bool = True
    certify: bool = True

    def __post_init__(self):
        if self.problem not in ("private", "public"):
            raise ValueError(f"problem must be 'private' or 'public', got {self.problem!r}")
        if self.n_agents < 3:
            raise ValueError("experiments need N >= 3")
        self.seeds = {"profile": 0, "graph": 0, "init": 0, **self.seeds}
        for d in self.dynamics:
            LearningDynamic.from_dict(d)

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else REPORT_THRESHOLD[self.problem]

    @property
    def supply(self) -> float:
        return float(self.n_agents) if self.capacity is None else float(self.capacity)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seeds={"profile": seed, "graph": seed, "init": seed})


def build_graph(cfg: ExperimentConfig) -> Graph:
    kind = cfg.graph.get("kind")
    if kind == "binary_tree":
        return gen_full_binary_tree(cfg.n_agents)
    if kind == "erdos_renyi":
        return gen_erdos_renyi(cfg.n_agents, float(cfg.graph.get("p", 0.3)), cfg.seeds["graph"])
    if kind == "cycle":
        return gen_directed_cycle(cfg.n_agents)
    if kind == "file":
        g = read_edge_list(cfg.graph["path"])
        if g.n_agents != cfg.n_agents:
            raise ValueError(f"graph file has N={g.n_agents}, config says {cfg.n_agents}")
        return g
    raise ValueError(f"unknown graph kind {kind!r}")


def build_profile(cfg: ExperimentConfig) -> UtilityProfile:
    if cfg.profile_path:
        prof = load_profile(cfg.profile_path)
        if prof.n_agents != cfg.n_agents:
            raise ValueError("profile size does not match n_agents")
        return prof
    return sample_quadratic_profile(
        cfg.n_agents, cfg.eta, cfg.theta_range, tuple(cfg.sigma_range), seed=cfg.seeds["profile"]
    )


@dataclass
class Instance:
    config: ExperimentConfig
    graph: Graph
    profile: UtilityProfile
    params: TunedParams
    mechanism: object
    equilibrium: MessageProfile


def build_instance(cfg: ExperimentConfig) -> Instance:
    g = build_graph(cfg)
    routing = build_routing(g)
    profile = build_profile(cfg)
    params = tune(routing, profile.eta, cfg.problem, margin=cfg.margin, refine=cfg.refine)
    mech = build_mechanism(routing, params, cfg.supply)
    return Instance(cfg, g, profile, params, mech, mech.nash_equilibrium(profile))


def tuning_report(inst: Instance) -> dict:
    rep = inst.params.to_dict()
    if inst.config.certify:
        cert = certify_contraction(inst.mechanism, inst.profile, n_probe_points=1, seed=inst.config.seeds["init"])
        rep["norm"] = cert.norm
        rep["is_contraction"] = cert.is_contraction
        rep["min_entry"] = cert.min_entry
    return rep


def equilibrium_report(inst: Instance) -> dict:
    mech, prof = inst.mechanism, inst.profile
    if inst.config.problem == "private":
        sol = solve_private(prof, inst.config.supply)
        kkt = kkt_residual_private(prof, inst.config.supply, sol)
    else:
        sol = solve_public(prof)
        kkt = kkt_residual_public(prof, sol)
    m = inst.equilibrium
    return {
        "problem": inst.config.problem,
        "efficient_allocation": np.atleast_1d(sol.allocation).tolist(),
        "duals": np.atleast_1d(sol.duals).tolist(),
        "kkt_residual": kkt,
        "ne_demand": m.y.tolist(),
        "ne_l1_norm": float(np.abs(m.flat()).sum()),
        "allocation_at_ne": mech.allocate(m).tolist(),
        "audit": mech.audit_equilibrium(prof, m).to_dict(),
    }


def trajectory_summary(traj: Trajectory, m_eq: MessageProfile, threshold: float) -> dict:
    l1 = float(np.abs(m_eq.flat()).sum())
    hit = next((i for i, d in enumerate(traj.dist_m) if d < threshold), None)
    try:
        rate = fit_rate(traj)
    except InsufficientData:
        rate = None
    return {
        "dynamic": traj.dynamic.name,
        "rounds": traj.n[-1],
        "converged_at": traj.converged_at,
        "final_distance": traj.dist_m[-1],
        "threshold": threshold,
        "relative_distance_at_threshold": None if hit is None else traj.dist_m[hit] / l1,
        "rate": rate,
        "final_budget": traj.budget[-1],
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Tune, solve and run every configured dynamic; optionally write files.

    The bundle holds ``tuning.json``, ``equilibrium.json``, one
    ``traj_<dynamic>.csv`` per dynamic and ``summary.json``.
    """
    inst = build_instance(cfg)
    m0 = MessageProfile.random(cfg.n_agents, cfg.seeds["init"])
    trajectories = {}
    for d in cfg.dynamics:
        dyn = LearningDynamic.from_dict(d)
        log.info("running %s for up to %d rounds", dyn.name, cfg.max_rounds)
        trajectories[dyn.name] = run(
            inst.mechanism, inst.profile, dyn, m0, cfg.max_rounds, cfg.tolerance, inst.equilibrium
        )
    threshold = REPORT_THRESHOLD[cfg.problem]
    bundle = {
        "config": cfg.to_dict(),
        "tuning": tuning_report(inst),
        "equilibrium": equilibrium_report(inst),
        "trajectories": trajectories,
        "summary": {
            "problem": cfg.problem,
            "graph": cfg.graph.get("kind"),
            "all_converged": all(t.converged_at is not None for t in trajectories.values()),
            "dynamics": [trajectory_summary(t, inst.equilibrium, threshold) for t in trajectories.values()],
        },
    }
    if out_dir is not None:
        write_bundle(bundle, out_dir)
    return bundle


def write_bundle(bundle: dict, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tuning.json").write_text(json.dumps(bundle["tuning"], indent=2) + "\n")
    (out / "equilibrium.json").write_text(json.dumps(bundle["equilibrium"], indent=2) + "\n")
    for name, traj in bundle["trajectories"].items():
        traj.write_csv(out / f"traj_{name}.csv")
    summary = {"config": bundle["config"], **bundle["summary"]}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


PLOT_METRICS = {"dist_m", "dist_x", "dist_p"}


def emit_plotdata(bundles, metric: str = "dist_m") -> str:
    """Long-format CSV ``dynamic,graph,n,dist`` over one or more bundles."""
    if metric not in PLOT_METRICS:
        raise ValueError(f"metric must be one of {sorted(PLOT_METRICS)}")
    if isinstance(bundles, dict):
        bundles = [bundles]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dynamic", "graph", "n", "dist"])
    for b in bundles:
        gname = b["config"]["graph"]["kind"]
        for name, traj in b["trajectories"].items():
            for n, d in zip(traj.n, getattr(traj, metric)):
                w.writerow([name, gname, n, repr(d)])
    return buf.getvalue()


def standard_configs(base: ExperimentConfig | None = None) -> list[ExperimentConfig]:
    """Private and public goods on a binary tree and an ER(0.3) graph, N=31."""
    base = base or ExperimentConfig(max_rounds=30_000)
    out = []
    for problem in ("private", "public"):
        for graph in ({"kind": "binary_tree"}, {"kind": "erdos_renyi", "p": 0.3}):
            out.append(replace(base, problem=problem, graph=graph, tol=None))
    return out


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit(obj: dict, out: str | None, name: str) -> None:
    text = json.dumps(obj, indent=2)
    print(text)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n")


def cmd_tune(args) -> int:
    inst = build_instance(_load_config(args))
    _emit(tuning_report(inst), args.out, "tuning.json")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = build_instance(_load_config(args))
    _emit(equilibrium_report(inst), args.out, "equilibrium.json")
    return EXIT_OK


def cmd_learn(args) -> int:
    bundle = run_experiment(_load_config(args), args.out)
    print(json.dumps(bundle["summary"], indent=2))
    return EXIT_OK if bundle["summary"]["all_converged"] else EXIT_NOT_CONVERGED


def cmd_reproduce(args) -> int:
    base = _load_config(args) if args.config else ExperimentConfig(max_rounds=30_000)
    if args.seed is not None:
        base = base.with_seed(args.seed)
    out = Path(args.out)
    by_problem: dict[str, list] = {"private": [], "public": []}
    ok = True
    for cfg in standard_configs(base):
        sub = out / f"{cfg.problem}_{cfg.graph['kind']}"
        bundle = run_experiment(cfg, sub)
        by_problem[cfg.problem].append(bundle)
        ok &= bundle["summary"]["all_converged"]
        for s in bundle["summary"]["dynamics"]:
            print(f"{cfg.problem:8s} {cfg.graph['kind']:12s} {s['dynamic']:16s} converged_at={s['converged_at']}")
    for problem, bundles in by_problem.items():
        (out / f"plot_{problem}_dist_m.csv").write_text(emit_plotdata(bundles, "dist_m"))
    (out / "plot_private_dist_x.csv").write_text(emit_plotdata(by_problem["private"], "dist_x"))
    (out / "plot_private_dist_p.csv").write_text(emit_plotdata(by_problem["private"], "dist_p"))
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_graph(args) -> int:
    text = format_edge_list(build_graph(_load_config(args)))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distmech", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)
    for name, fn, needs_out in (
        ("tune", cmd_tune, False),
        ("solve", cmd_solve, False),
        ("learn", cmd_learn, True),
        ("reproduce-figures", cmd_reproduce, True),
        ("graph", cmd_graph, False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", required=needs_out, help="output directory (file for 'graph')")
        p.add_argument("--seed", type=int, help="override profile, graph and init seeds")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except TuningFailed as exc:
        print(f"tuning failed: {exc}", file=sys.stderr)
        return EXIT_TUNING
    except DistMechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
