"""Monte Carlo experiment runner: seeded sweeps over horizons and repetitions,
regret aggregation, scaling-exponent fits, and pseudo-regret for i.i.d.
processes.

Seeding scheme (the reproducibility contract): the cell for horizon T and
repetition ``rep`` under ``master_seed`` uses two independent streams,

    adversary: numpy SeedSequence(master_seed, spawn_key=(T, rep, 0))
    player:    numpy SeedSequence(master_seed, spawn_key=(T, rep, 1))

each feeding a PCG64 generator.  Identical experiment specs therefore
reproduce identical results bit for bit, and distinct cells never share a
stream.  Sweep cells are mutually independent; records are keyed by (T, rep)
so assembly order is irrelevant.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
from scipy import stats

from . import adversaries as adversaries_mod
from .adversaries import (MemoryTwoReductionSpec, RandomWalkSpec, realize_iid,
                          realize_memory_two_reduction, realize_oblivious,
                          realize_random_walk, wrap_switching_cost)
from .game import (AlternatingPlayer, ConfigurationError, ConstantPlayer,
                   FeedbackModel, UniformRandomPlayer, constant_baseline,
                   play_game, standard_regret, switch_count)
from .learners import Exp3P, FollowLazyLeader
from .reductions import (BoundsConfig, DriftDifferenceExp3P, MinibatchHedge,
                         RangeNormalizedHedge, SuccessiveElimination,
                         SwitchingCostFLL)

METRICS = ("policy_regret", "standard_regret", "switches", "pseudo_regret")

ADVERSARY_DEFAULTS = {
    "zero": {"k": 2},
    "table": {"values": None, "path": None, "switching_cost": None},
    "iid-uniform": {"k": 2, "switching_cost": None},
    "iid": {"means": None, "noise": "bernoulli", "sigma": 0.1, "switching_cost": None},
    "random-walk": {"epsilon": None, "truncated": False,
                    "truncation_delta": 1.0 / 80.0, "with_switching_cost": True,
                    "cost": 1.0},
    "memory-two-reduction": {"epsilon": None, "truncated": False,
                             "truncation_delta": 1.0 / 80.0},
}

PLAYER_DEFAULTS = {
    "constant": {"action": 0},
    "uniform-random": {},
    "alternating": {},
    "hedge": {"eta": None},
    "fll": {"epsilon": None},
    "fll-switching": {"cost": 1.0},
    "exp3p": {"delta_p": None},
    "exp3p-drift": {"delta_p": None},
    "minibatch-hedge": {"m": None, "epochs": None, "base_action": 0},
    "elimination": {"delta": 0.05, "conf_const": 0.5},
}

# Feedback model each player consumes when the experiment does not pin one.
PLAYER_FEEDBACK = {
    "hedge": "full", "fll": "full", "fll-switching": "full",
    "constant": "bandit", "uniform-random": "bandit", "alternating": "bandit",
    "exp3p": "bandit", "exp3p-drift": "bandit", "minibatch-hedge": "bandit",
    "elimination": "bandit",
}


def normalize_spec(spec, defaults_map, label):
    """Fill defaults into a tagged spec dict, rejecting unknown keys."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError(f"{label} must be a kind string or an object with a 'kind'")
    kind = spec["kind"]
    if kind not in defaults_map:
        raise ConfigurationError(
            f"unknown {label} kind {kind!r}; expected one of {sorted(defaults_map)}")
    out = {"kind": kind, **defaults_map[kind]}
    for key, value in spec.items():
        if key == "kind":
            continue
        if key not in defaults_map[kind]:
            raise ConfigurationError(f"unknown key: {label}.{key}")
        out[key] = value
    return out


def adversary_action_count(spec):
    spec = normalize_spec(spec, ADVERSARY_DEFAULTS, "adversary")
    kind = spec["kind"]
    if kind in ("zero", "iid-uniform"):
        return int(spec["k"])
    if kind == "iid":
        if not spec["means"]:
            raise ConfigurationError("adversary.means is required for kind 'iid'")
        return len(spec["means"])
    if kind == "table":
        if spec["values"] is not None:
            return len(spec["values"][0])
        raise ConfigurationError("cannot infer the action count from a table path before loading")
    return 2  # both walk-based processes use two actions


def adversary_memory(spec):
    spec = normalize_spec(spec, ADVERSARY_DEFAULTS, "adversary")
    kind = spec["kind"]
    if kind == "memory-two-reduction":
        return 2
    if kind == "random-walk":
        return 1 if spec["with_switching_cost"] else 0
    return 1 if spec.get("switching_cost") is not None else 0


def build_adversary(spec, T, rng):
    spec = normalize_spec(spec, ADVERSARY_DEFAULTS, "adversary")
    kind = spec["kind"]
    if kind == "zero":
        realization = realize_oblivious(np.zeros((T, int(spec["k"]))))
    elif kind == "table":
        if spec["values"] is not None:
            realization = realize_oblivious(np.asarray(spec["values"], dtype=float))
        elif spec["path"] is not None:
            realization = adversaries_mod.load_loss_table(spec["path"])
        else:
            raise ConfigurationError("table adversary needs 'values' or 'path'")
        if realization.horizon < T:
            raise ConfigurationError(
                f"table covers {realization.horizon} rounds but the game needs T={T}")
    elif kind == "iid-uniform":
        realization = realize_iid([0.5] * int(spec["k"]), T, rng, noise="uniform")
    elif kind == "iid":
        if not spec["means"]:
            raise ConfigurationError("adversary.means is required for kind 'iid'")
        realization = realize_iid(spec["means"], T, rng, noise=spec["noise"],
                                  sigma=spec["sigma"])
    elif kind == "random-walk":
        walk_spec = RandomWalkSpec(horizon=T, epsilon=spec["epsilon"],
                                   truncated=spec["truncated"],
                                   truncation_delta=spec["truncation_delta"],
                                   with_switching_cost=spec["with_switching_cost"],
                                   cost=spec["cost"])
        return realize_random_walk(walk_spec, rng)
    elif kind == "memory-two-reduction":
        inner = RandomWalkSpec(horizon=T - 1, epsilon=spec["epsilon"],
                               truncated=spec["truncated"],
                               truncation_delta=spec["truncation_delta"],
                               with_switching_cost=True)
        return realize_memory_two_reduction(MemoryTwoReductionSpec(horizon=T, inner=inner), rng)
    else:  # pragma: no cover - normalize_spec already rejects
        raise ConfigurationError(f"unknown adversary kind {kind!r}")
    if kind in ("table", "iid-uniform", "iid") and spec["switching_cost"] is not None:
        realization = wrap_switching_cost(realization, cost=float(spec["switching_cost"]))
    return realization


def build_player(spec, realization, T):
    spec = normalize_spec(spec, PLAYER_DEFAULTS, "player")
    kind = spec["kind"]
    k = realization.k
    if kind == "constant":
        return ConstantPlayer(k, action=int(spec["action"]))
    if kind == "uniform-random":
        return UniformRandomPlayer(k)
    if kind == "alternating":
        return AlternatingPlayer(k)
    if kind == "hedge":
        return RangeNormalizedHedge(realization.range_bound, k, eta=spec["eta"])
    if kind == "fll":
        return FollowLazyLeader(k, horizon=T, epsilon=spec["epsilon"])
    if kind == "fll-switching":
        bounds = BoundsConfig.from_realization(realization, T)
        return SwitchingCostFLL(bounds, k, cost=float(spec["cost"]))
    if kind == "exp3p":
        return Exp3P(k, T, delta=spec["delta_p"])
    if kind == "exp3p-drift":
        bounds = BoundsConfig.from_realization(realization, T)
        return DriftDifferenceExp3P(bounds, k, delta=spec["delta_p"])
    if kind == "minibatch-hedge":
        m = realization.memory if spec["m"] is None else int(spec["m"])
        bounds = BoundsConfig(range_bound=realization.range_bound,
                              drift_bound=realization.max_drift(T),
                              memory=m, horizon=T)
        return MinibatchHedge(bounds, k, epochs=spec["epochs"],
                              base_action=int(spec["base_action"]))
    if kind == "elimination":
        return SuccessiveElimination(k, T, delta=float(spec["delta"]),
                                     conf_const=float(spec["conf_const"]))
    raise ConfigurationError(f"unknown player kind {kind!r}")  # pragma: no cover


def resolve_feedback(player_spec, feedback=None):
    if feedback is not None:
        if isinstance(feedback, FeedbackModel):
            return feedback
        try:
            return FeedbackModel(feedback)
        except ValueError:
            raise ConfigurationError(
                f"unknown feedback model {feedback!r}; use 'full' or 'bandit'") from None
    kind = player_spec if isinstance(player_spec, str) else player_spec.get("kind")
    return FeedbackModel(PLAYER_FEEDBACK.get(kind, "full"))


def cell_seed_sequences(master_seed, T, rep):
    """Independent (adversary, player) seed sequences for one sweep cell."""
    return (np.random.SeedSequence(master_seed, spawn_key=(int(T), int(rep), 0)),
            np.random.SeedSequence(master_seed, spawn_key=(int(T), int(rep), 1)))


def pseudo_regret(transcript, realization):
    """sum_t (mu(X_t) + 1{switch at t}) - T * min_x mu(x), using the stored
    per-action means of an i.i.d. realization rather than the realized noise."""
    if realization.means is None:
        raise TypeError("realization does not store per-action means; "
                        "build it with realize_iid")
    mu = realization.means
    # summing per-round gaps keeps the value exactly 0 (and never negative)
    # when the player sits on an optimal-mean arm
    gaps = mu[transcript.actions] - mu.min()
    return float(np.sum(gaps)) + switch_count(transcript.actions)


def run_single(adversary_spec, player_spec, T, rep, master_seed,
               metrics=("policy_regret", "switches"), feedback=None):
    """Realize, play, and measure one cell; returns the record dict."""
    for metric in metrics:
        if metric not in METRICS:
            raise ConfigurationError(f"unknown metric {metric!r}")
    adv_ss, ply_ss = cell_seed_sequences(master_seed, T, rep)
    realization = build_adversary(adversary_spec, T, np.random.Generator(np.random.PCG64(adv_ss)))
    player = build_player(player_spec, realization, T)
    model = resolve_feedback(player_spec, feedback)
    transcript = play_game(realization, player, T,
                           model, np.random.Generator(np.random.PCG64(ply_ss)))
    record = {"T": int(T), "rep": int(rep), "seed": int(ply_ss.generate_state(1)[0])}
    if "policy_regret" in metrics:
        baseline = constant_baseline(realization, T)
        record["policy_regret"] = float(np.sum(transcript.incurred_losses) - baseline.min())
    if "standard_regret" in metrics:
        record["standard_regret"] = standard_regret(transcript, realization)
    if "switches" in metrics:
        record["switches"] = switch_count(transcript.actions)
    if "pseudo_regret" in metrics:
        try:
            record["pseudo_regret"] = pseudo_regret(transcript, realization)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
    return record


@dataclasses.dataclass
class ExperimentSpec:
    """A sweep definition: one (adversary, player, feedback) pairing over a
    strictly increasing horizon grid with R repetitions per horizon."""

    adversary: dict
    player: dict
    horizon_grid: list
    repetitions: int
    master_seed: int = 0
    feedback: str | None = None
    metrics: tuple = ("policy_regret", "switches")

    def __post_init__(self):
        grid = [int(T) for T in self.horizon_grid]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("horizon grid must be non-empty and strictly increasing")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions >= 1 required")
        self.horizon_grid = grid
        self.metrics = tuple(self.metrics)
        for metric in self.metrics:
            if metric not in METRICS:
                raise ConfigurationError(f"unknown metric {metric!r}")
        self.adversary = normalize_spec(self.adversary, ADVERSARY_DEFAULTS, "adversary")
        self.player = normalize_spec(self.player, PLAYER_DEFAULTS, "player")


@dataclasses.dataclass
class FitResult:
    alpha: float
    beta: float
    ci: tuple


@dataclasses.dataclass
class SweepResult:
    spec: ExperimentSpec
    records: list
    errors: list
    aggregates: dict      # metric -> list of {"T", "mean", "se"}
    fit_metric: str | None
    alpha: float | None
    alpha_ci: tuple | None
    beta: float | None
    fit_error: str | None

    def summary_dict(self):
        per_T = self.aggregates.get(self.fit_metric, []) if self.fit_metric else []
        return {
            "pairing": {"adversary": self.spec.adversary, "player": self.spec.player,
                        "feedback": self.spec.feedback},
            "grid": list(self.spec.horizon_grid),
            "fit_metric": self.fit_metric,
            "alpha": self.alpha,
            "alpha_ci": list(self.alpha_ci) if self.alpha_ci else None,
            "beta": self.beta,
            "fit_error": self.fit_error,
            "per_T": per_T,
            "errors": self.errors,
        }


def fit_rate(points):
    """OLS of log(mean regret) on log(T); 95% confidence interval on the slope.

    Non-positive means are dropped with a warning; at least 3 usable points
    are required.
    """
    usable = []
    for T, y in points:
        if y > 0:
            usable.append((float(T), float(y)))
        else:
            warnings.warn(f"dropping non-positive mean regret at T={T}")
    if len(usable) < 3:
        raise ConfigurationError("fit_rate needs at least 3 points with positive means")
    x = np.log([p[0] for p in usable])
    y = np.log([p[1] for p in usable])
    res = stats.linregress(x, y)
    tcrit = stats.t.ppf(0.975, len(usable) - 2)
    stderr = 0.0 if not math.isfinite(res.stderr) else res.stderr
    ci = (res.slope - tcrit * stderr, res.slope + tcrit * stderr)
    return FitResult(alpha=float(res.slope), beta=float(res.intercept),
                     ci=(float(ci[0]), float(ci[1])))


def select_fit_points(points, use_top_half=True):
    """Fitting window: the top half of the grid (small-T transients bias the
    slope), but never fewer than 3 points."""
    pts = sorted(points, key=lambda p: p[0])
    if not use_top_half or len(pts) <= 3:
        return pts
    keep = max(3, (len(pts) + 1) // 2)
    return pts[-keep:]


def run_sweep(spec, fit_metric=None, use_top_half=True):
    """Run every (T, rep) cell of an :class:`ExperimentSpec`.

    Infeasible pairings are recorded per horizon and the sweep continues;
    identical specs reproduce identical results.
    """
    if not isinstance(spec, ExperimentSpec):
        spec = ExperimentSpec(**spec)
    records, errors = [], []
    for T in spec.horizon_grid:
        for rep in range(spec.repetitions):
            try:
                rec = run_single(spec.adversary, spec.player, T, rep,
                                 spec.master_seed, spec.metrics, spec.feedback)
            except ConfigurationError as exc:
                errors.append({"T": int(T), "error": str(exc)})
                break  # feasibility does not depend on the repetition
            records.append(rec)

    aggregates = {}
    for metric in spec.metrics:
        rows = []
        for T in spec.horizon_grid:
            vals = np.array([r[metric] for r in records if r["T"] == T], dtype=float)
            if vals.size == 0:
                continue
            se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            rows.append({"T": int(T), "mean": float(vals.mean()), "se": se})
        aggregates[metric] = rows

    if fit_metric is None:
        fit_metric = "policy_regret" if "policy_regret" in spec.metrics else spec.metrics[0]
    alpha = beta = None
    alpha_ci = None
    fit_error = None
    points = [(row["T"], row["mean"]) for row in aggregates.get(fit_metric, [])]
    try:
        fit = fit_rate(select_fit_points(points, use_top_half))
        alpha, beta, alpha_ci = fit.alpha, fit.beta, fit.ci
    except ConfigurationError as exc:
        fit_error = str(exc)
    return SweepResult(spec=spec, records=records, errors=errors,
                       aggregates=aggregates, fit_metric=fit_metric,
                       alpha=alpha, alpha_ci=alpha_ci, beta=beta,
                       fit_error=fit_error)


def lower_bound_probe(player_specs, T_grid, repetitions, master_seed):
    """Mean policy regret divided by T^(2/3), per player, against the
    untruncated paired walk with switching costs at epsilon = T^(-1/3)."""
    out = {}
    for i, pspec in enumerate(player_specs):
        kind = pspec if isinstance(pspec, str) else pspec.get("kind", f"player{i}")
        label = kind if kind not in out else f"{kind}#{i}"
        rows = []
        for T in T_grid:
            vals = []
            for rep in range(repetitions):
                rec = run_single({"kind": "random-walk"}, pspec, T, rep,
                                 master_seed, ("policy_regret",))
                vals.append(rec["policy_regret"])
            norm = np.array(vals) / T ** (2.0 / 3.0)
            se = float(np.std(norm, ddof=1) / math.sqrt(len(norm))) if len(norm) > 1 else 0.0
            rows.append({"T": int(T), "normalized_mean": float(norm.mean()), "se": se})
        out[label] = rows
    return out
