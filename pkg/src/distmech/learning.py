"""Repeated play under deterministic adaptive best-response dynamics.

All agents update simultaneously each round. The dynamics differ only in
the message they best-respond to:

* ``cournot``: the previous round's message.
* ``k_period``: the average of the last ``min(k, n)`` messages.
* ``exp_weighted``: ``m_{n-1}/2 + r_{n-1}/2`` with ``r_n = m_n/2 + r_{n-1}/2``
  and ``r_0 = m_0``.
* ``fictitious_play``: the average of every message so far.

Averages of messages stand in for empirical distributions, which is exact
for quadratic utilities. Mixed strategies are not represented.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import Diverged, InsufficientData
from .mechanism import MessageProfile, RoutedMechanism
from .model import UtilityProfile

DIVERGENCE_GUARD = 1e12
CSV_HEADER = ("n", "dist_m", "dist_x", "dist_p", "budget")

KINDS = ("cournot", "k_period", "exp_weighted", "fictitious_play")


@dataclass(frozen=True)
class LearningDynamic:
    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dynamic {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise ValueError("k must be at least 1")

    @property
    def name(self) -> str:
        return f"k_period_{self.k}" if self.kind == "k_period" else self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k} if self.kind == "k_period" else {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "LearningDynamic":
        return cls(d["kind"], int(d.get("k", 1)))


def cournot() -> LearningDynamic:
    return LearningDynamic("cournot")


def k_period(k: int) -> LearningDynamic:
    return LearningDynamic("k_period", k)


def exp_weighted() -> LearningDynamic:
    return LearningDynamic("exp_weighted")


def fictitious_play() -> LearningDynamic:
    return LearningDynamic("fictitious_play")


@dataclass
class Trajectory:
    dynamic: LearningDynamic
    tol: float
    n: list = field(default_factory=list)
    dist_m: list = field(default_factory=list)
    dist_x: list = field(default_factory=list)
    dist_p: list = field(default_factory=list)
    budget: list = field(default_factory=list)
    messages: list | None = None
    converged_at: int | None = None
    final: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.n)

    def rows(self):
        return zip(self.n, self.dist_m, self.dist_x, self.dist_p, self.budget)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for n, dm, dx, dp, b in self.rows():
            w.writerow([n, repr(dm), repr(dx), repr(dp), repr(b)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    out = {k: np.array([float(r[k]) for r in rows]) for k in CSV_HEADER}
    out["n"] = out["n"].astype(int)
    return out


def run(
    mech: RoutedMechanism,
    profile: UtilityProfile,
    dynamic: LearningDynamic,
    m0: MessageProfile,
    max_rounds: int = 10_000,
    tol: float = 1e-3,
    equilibrium: MessageProfile | None = None,
    keep_messages: bool = False,
) -> Trajectory:
    """Iterate ``dynamic`` from ``m0`` until ``||m_n - m~||_2 < tol``.

    Raises :class:`Diverged` when the distance to equilibrium exceeds the
    guard.
    """
    n_agents = mech.n_agents
    m_eq = equilibrium if equilibrium is not None else mech.nash_equilibrium(profile)
    v_eq = m_eq.flat()
    x_eq = mech.allocate(m_eq)
    p_eq = mech.price(m_eq)

    traj = Trajectory(dynamic, tol, messages=[] if keep_messages else None)

    def record(n, m: MessageProfile, v):
        d = float(np.linalg.norm(v - v_eq))
        if not d <= DIVERGENCE_GUARD:
            raise Diverged(f"{dynamic.name}: distance {d:.3g} at round {n}")
        traj.n.append(n)
        traj.dist_m.append(d)
        traj.dist_x.append(float(np.linalg.norm(mech.allocate(m) - x_eq)))
        traj.dist_p.append(float(np.linalg.norm(mech.price(m) - p_eq)))
        traj.budget.append(float(np.sum(mech.tax(m))))
        if keep_messages:
            traj.messages.append(v.copy())
        return d

    v = m0.flat()
    m = m0
    if record(0, m, v) < tol:
        traj.converged_at = 0
        traj.final = v
        return traj

    window = deque([v], maxlen=dynamic.k) if dynamic.kind == "k_period" else None
    running = v.copy()  # r_n for exp_weighted, sum of messages for fictitious play
    count = 1

    for n in range(1, max_rounds + 1):
        if dynamic.kind == "cournot":
            arg = v
        elif dynamic.kind == "k_period":
            arg = np.mean(window, axis=0)
        elif dynamic.kind == "exp_weighted":
            arg = 0.5 * v + 0.5 * running
        else:
            arg = running / count
        m = mech.best_response_map(profile, MessageProfile.from_flat(arg, n_agents))
        v = m.flat()
        if dynamic.kind == "k_period":
            window.append(v)
        elif dynamic.kind == "exp_weighted":
            running = 0.5 * v + 0.5 * running
        elif dynamic.kind == "fictitious_play":
            running += v
            count += 1
        if record(n, m, v) < tol:
            traj.converged_at = n
            break
    traj.final = v
    return traj


def distance_series(traj: Trajectory) -> list[tuple[int, float]]:
    return list(zip(traj.n, traj.dist_m))


def fit_rate(traj: Trajectory, min_points: int = 5) -> float:
    """Least-squares slope of ``log dist`` against ``n`` after a 10% burn-in.

    Zero distances carry no rate information and are dropped.
    """
    n = np.asarray(traj.n, dtype=float)
    d = np.asarray(traj.dist_m, dtype=float)
    if n.size == 0:
        raise InsufficientData("empty trajectory")
    start = int(0.1 * n.size)
    n, d = n[start:], d[start:]
    keep = (d > 0) & (d < DIVERGENCE_GUARD)
    if keep.sum() < min_points:
        raise InsufficientData(f"only {int(keep.sum())} usable rounds, need {min_points}")
    slope, _ = np.polyfit(n[keep], np.log(d[keep]), 1)
    return float(slope)
