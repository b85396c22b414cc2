"""Player strategies built by reduction on top of the base learners.

* :class:`SwitchingCostFLL` -- full information, oblivious losses plus a
  switch surcharge: rescales each round's oblivious vector into [0,1] and
  follows a lazy leader.
* :class:`DriftDifferenceExp3P` -- bandit feedback, drifting oblivious
  losses: feeds centered consecutive differences to Exp3.P.
* :class:`MinibatchHedge` -- bandit feedback against a memory-m process:
  epochs with randomized exploration intervals produce unbiased per-epoch
  loss estimates for Hedge.
* :class:`SuccessiveElimination` -- i.i.d. losses with switching costs:
  stage-doubling round-robin blocks with confidence-radius elimination.

Each reduction validates every value it feeds to its inner learner and keeps
a record of the extreme fed values (``fed_range``) so normalization contracts
can be audited after a run.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from fractions import Fraction

import numpy as np
from scipy import stats

from .game import ConfigurationError, ContractViolation, FeedbackModel, Player
from .learners import Exp3P, FollowLazyLeader, Hedge

_RANGE_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class BoundsConfig:
    """Declared process constants a reduction relies on: range bound C, drift
    bound D = max_t D_t, adversary memory m, and the horizon T."""

    range_bound: float
    drift_bound: float
    memory: int
    horizon: int

    def __post_init__(self):
        if self.range_bound <= 0 or self.drift_bound < 0:
            raise ConfigurationError("need C > 0 and D >= 0")
        if self.memory < 0 or self.horizon < 1:
            raise ConfigurationError("need m >= 0 and T >= 1")

    @classmethod
    def from_realization(cls, realization, horizon=None):
        T = realization.horizon if horizon is None else int(horizon)
        return cls(range_bound=realization.range_bound,
                   drift_bound=realization.max_drift(T),
                   memory=realization.memory, horizon=T)


class _FedRangeMixin:
    fed_min = math.inf
    fed_max = -math.inf

    def _admit(self, value, context):
        """Validate a value destined for an inner learner and clip float noise.

        The raw value is recorded in ``fed_range`` before clipping so audits
        see the true extremes."""
        if value < self.fed_min:
            self.fed_min = value
        if value > self.fed_max:
            self.fed_max = value
        if value < -_RANGE_TOL or value > 1.0 + _RANGE_TOL:
            raise ContractViolation(
                f"{context}: computed value {value:.6g} escaped [0, 1]; "
                "the process violated its declared range/drift bounds")
        return min(1.0, max(0.0, value))

    @property
    def fed_range(self):
        return (self.fed_min, self.fed_max)


class SwitchingCostFLL(_FedRangeMixin, Player):
    """Lazy leader on rescaled oblivious losses under a switch surcharge.

    The engine delivers f_t(X_1..X_{t-1}, x) = l_t(x) + cost * 1{x != X_{t-1}};
    the player knows its own previous action and the declared cost, strips the
    surcharge pattern to recover l_t, rescales to
    l'_t(x) = (l_t(x) - min_y l_t(y)) / (C - cost), and feeds l' to the lazy
    leader.  Expected policy regret is O(C sqrt(T)).
    """

    feedback = FeedbackModel.FULL_INFORMATION

    def __init__(self, bounds, k, cost=1.0, leader=None):
        if bounds.range_bound <= cost:
            raise ConfigurationError(
                f"range bound C = {bounds.range_bound} must exceed the switching cost {cost}")
        self.k = k
        self.bounds = bounds
        self.cost = float(cost)
        self._denom = bounds.range_bound - cost
        self.leader = leader or FollowLazyLeader(k, horizon=bounds.horizon)
        self._arange = np.arange(k)
        self._last_action = None

    def choose(self, rng):
        return self.leader.choose(rng)

    def observe(self, action, row):
        ell = np.asarray(row, dtype=float).copy()
        if self._last_action is not None:
            ell -= self.cost * (self._arange != self._last_action)
        spread = float(ell.max() - ell.min())
        if spread > self._denom * (1.0 + _RANGE_TOL):
            raise ContractViolation(
                f"oblivious loss spread {spread:.6g} exceeds C - cost = {self._denom:.6g}")
        scaled = (ell - ell.min()) / self._denom
        scaled = np.array([self._admit(v, "rescaled oblivious loss") for v in scaled])
        self.leader.observe(action, scaled)
        self._last_action = action


class RangeNormalizedHedge(_FedRangeMixin, Player):
    """Hedge behind a per-round range normalization.

    Delivered full-information vectors are shifted to zero minimum and
    divided by the declared range bound C before reaching Hedge, so the [0,1]
    contract holds whenever the process honors C.  The shift leaves Hedge's
    distribution unchanged, so behavior matches plain Hedge up to the fixed
    1/C rescaling of its effective rate.
    """

    feedback = FeedbackModel.FULL_INFORMATION

    def __init__(self, range_bound, k, eta=None, feedback_count=None):
        self.k = k
        self._denom = range_bound if range_bound > 0 else 1.0
        self.hedge = Hedge(k, eta=eta, feedback_count=feedback_count)

    def choose(self, rng):
        return self.hedge.choose(rng)

    def observe(self, action, row):
        v = np.asarray(row, dtype=float)
        spread = float(v.max() - v.min())
        if spread > self._denom * (1.0 + _RANGE_TOL):
            raise ContractViolation(
                f"loss spread {spread:.6g} exceeds the declared range bound {self._denom:.6g}")
        scaled = (v - v.min()) / self._denom
        scaled = np.array([self._admit(x, "range-normalized loss") for x in scaled])
        self.hedge.update(scaled)


class DriftDifferenceExp3P(_FedRangeMixin, Player):
    """Exp3.P on centered consecutive loss differences, for bandit feedback.

    Each round feeds (l_t(X_t) - l_{t-1}(X_{t-1})) / (2(C + D)) + 1/2, which
    stays in [0,1] because |l_t(x_t) - l_{t-1}(x_{t-1})| <= D + C whenever the
    process honors its declared bounds.  Round 1 has no previous observation
    and feeds exactly 1/2.
    """

    feedback = FeedbackModel.BANDIT

    def __init__(self, bounds, k, delta=None):
        self.k = k
        self.bounds = bounds
        self.scale = 2.0 * (bounds.range_bound + bounds.drift_bound)
        self.learner = Exp3P(k, bounds.horizon, delta=delta)
        self._prev = None

    def choose(self, rng):
        return self.learner.choose(rng)

    def observe(self, action, loss):
        if self._prev is None:
            value = 0.5
        else:
            value = (loss - self._prev) / self.scale + 0.5
        value = self._admit(value, "centered loss difference")
        self.learner.update(action, value)
        self._prev = loss


class DoublingHorizon(Player):
    """Horizon-free wrapper: rebuilds a fixed-horizon player with doubled T
    (and whatever refreshed bounds the factory computes) each time the current
    horizon is exhausted."""

    def __init__(self, factory, initial_horizon):
        if initial_horizon < 1:
            raise ConfigurationError("initial horizon >= 1 required")
        self.factory = factory
        self.horizon = int(initial_horizon)
        self.inner = factory(self.horizon)
        self.k = self.inner.k
        self.feedback = self.inner.feedback
        self.restart_rounds = []
        self._round_in_block = 0
        self._total_rounds = 0

    def choose(self, rng):
        if self._round_in_block >= self.horizon:
            self.horizon *= 2
            self.inner = self.factory(self.horizon)
            self._round_in_block = 0
            self.restart_rounds.append(self._total_rounds + 1)
        return self.inner.choose(rng)

    def observe(self, action, feedback):
        self.inner.observe(action, feedback)
        self._round_in_block += 1
        self._total_rounds += 1


# ---------------------------------------------------------------------------
# exploration-interval geometry and sampling
# ---------------------------------------------------------------------------

def exploration_geometry(epoch_length, k, m):
    """Number of admissible start positions and the minimum circular
    start-to-start distance for exploration intervals of length 2(m+1).

    An interval occupies 2m+2 rounds and any two intervals must leave at
    least 2m+1 free steps between them, so starts must sit at circular
    distance >= 4m+3.  Feasibility requires
    epoch_length - (2m+2) >= k * (4m+3).
    """
    n_positions = epoch_length - 2 * m - 1
    min_gap = 4 * m + 3
    if epoch_length - (2 * m + 2) < k * min_gap:
        raise ConfigurationError(
            f"infeasible exploration geometry: epoch_length - (2m+2) = "
            f"{epoch_length - (2 * m + 2)} < K*(4m+3) = {k * min_gap}")
    return n_positions, min_gap


def sample_exploration_starts(epoch_length, k, m, rng):
    """Draw one start offset per arm, uniform over well-separated circular
    configurations, so each arm's start is exactly uniform over the
    admissible positions.

    Draw order: a uniform composition of the circular slack (stars and bars),
    then a uniform rotation, then a uniform arm-to-slot permutation.
    Returned offsets are 0-based within the epoch.
    """
    n, min_gap = exploration_geometry(epoch_length, k, m)
    if k == 1:
        return np.array([int(rng.integers(n))])
    slack = n - k * min_gap
    if slack > 0:
        bars = np.sort(rng.choice(slack + k - 1, size=k - 1, replace=False))
        parts = np.diff(np.concatenate([[-1], bars, [slack + k - 1]])) - 1
    else:
        parts = np.zeros(k, dtype=int)
    gaps = min_gap + parts
    rotation = int(rng.integers(n))
    slots = (rotation + np.concatenate([[0], np.cumsum(gaps[:-1])])) % n
    perm = rng.permutation(k)
    starts = np.empty(k, dtype=int)
    starts[perm] = slots
    return starts


def _circularly_separated(positions, n, min_gap):
    pos = sorted(positions)
    if len(pos) <= 1:
        return True
    for i, p in enumerate(pos):
        gap = (pos[(i + 1) % len(pos)] - p) % n
        if gap < min_gap:
            return False
    return True


def enumerate_start_sets(n_positions, k, m):
    """All well-separated k-subsets of the circle (exact, for small circles)."""
    min_gap = 4 * m + 3
    return [c for c in itertools.combinations(range(n_positions), k)
            if _circularly_separated(c, n_positions, min_gap)]


def sampler_uniformity_report(epoch_length, k, m, draws=100_000, rng=None,
                              sampler=None, significance=1e-3):
    """Check that each arm's exploration start is uniform over the circle.

    Small circles (<= 12 positions) are settled by exact enumeration in
    rational arithmetic; larger ones use a Monte Carlo chi-square test per
    arm at the given significance level.
    """
    n, _ = exploration_geometry(epoch_length, k, m)
    if n <= 12:
        sets = enumerate_start_sets(n, k, m)
        membership = [sum(1 for s in sets if p in s) for p in range(n)]
        total = len(sets)
        marginals = [Fraction(c, total * k) for c in membership]
        uniform = all(mrg == Fraction(1, n) for mrg in marginals)
        return {"mode": "exact", "n_positions": n, "configurations": total,
                "membership_counts": membership,
                "marginals": [str(mrg) for mrg in marginals],
                "uniform": uniform, "pass": uniform}
    if rng is None:
        raise ConfigurationError("Monte Carlo mode needs an rng")
    draw = sampler or (lambda r: sample_exploration_starts(epoch_length, k, m, r))
    counts = np.zeros((k, n), dtype=np.int64)
    for _ in range(int(draws)):
        starts = draw(rng)
        for arm in range(k):
            counts[arm, starts[arm]] += 1
    expected = draws / n
    stats_ = ((counts - expected) ** 2 / expected).sum(axis=1)
    pvals = stats.chi2.sf(stats_, df=n - 1)
    return {"mode": "monte-carlo", "n_positions": n, "draws": int(draws),
            "chi_square": [float(s) for s in stats_],
            "p_values": [float(p) for p in pvals],
            "significance": significance,
            "pass": bool(np.all(pvals >= significance))}


# ---------------------------------------------------------------------------
# epoch mini-batch Hedge with exploration intervals
# ---------------------------------------------------------------------------

def default_epoch_count(horizon):
    """ceil(T^(2/3)) epochs, with float-noise protection on exact powers."""
    return int(math.ceil(horizon ** (2.0 / 3.0) - 1e-9))


def scaled_loss_estimate(value, base_value, bounds):
    """Centered, scaled difference of two observed losses:
    (value - base_value) / (2 (C + (m+1) D)) + 1/2."""
    scale = 2.0 * (bounds.range_bound + (bounds.memory + 1) * bounds.drift_bound)
    return (value - base_value) / scale + 0.5


class MinibatchHedge(_FedRangeMixin, Player):
    """Bandit strategy for memory-m processes: epochs, one Hedge draw per epoch.

    The horizon is split into ``epochs`` equal epochs (default ceil(T^(2/3)),
    plus a truncated exploit-only final epoch for the remainder).  In each
    epoch the player draws an exploitation action from Hedge and plays it,
    except inside k randomly placed exploration intervals: the interval for
    arm x plays m+1 rounds of the base action then m+1 rounds of x, so the
    two anchor observations f(x0..x0) and f(x..x) are functions of interval
    rounds only.  Their centered scaled difference is an unbiased estimate of
    the epoch average of the scaled constant-x loss, independent of the
    exploitation draw; the k estimates are fed to Hedge at epoch end.

    ``exploration_rng`` isolates the interval randomness from the game stream
    and ``exploit_override`` forces the per-epoch exploitation action; both
    exist so the independence of the estimates can be tested directly.
    """

    feedback = FeedbackModel.BANDIT

    def __init__(self, bounds, k, epochs=None, base_action=0,
                 exploration_rng=None, exploit_override=None):
        T = bounds.horizon
        m = bounds.memory
        self.k = k
        self.bounds = bounds
        if not 0 <= base_action < k:
            raise ConfigurationError(f"base action {base_action} outside [0, {k})")
        self.base_action = int(base_action)
        self.epochs = default_epoch_count(T) if epochs is None else int(epochs)
        if self.epochs < 1:
            raise ConfigurationError("need at least one epoch")
        L = T // self.epochs
        if L < 2 * k * (m + 1):
            raise ConfigurationError(
                f"epoch length {L} < 2K(m+1) = {2 * k * (m + 1)}")
        exploration_geometry(L, k, m)  # raises with the violated inequality
        self.epoch_length = L
        self.tail = T - self.epochs * L
        self.scale = 2.0 * (bounds.range_bound + (bounds.memory + 1) * bounds.drift_bound)
        self.hedge = Hedge(k, feedback_count=self.epochs)
        self.exploration_rng = exploration_rng
        self.exploit_override = exploit_override
        self.trace = []
        self._round = 0
        self._epoch = 0
        self._pos = None
        self._schedule = None
        self._obs_slots = {}
        self._base_vals = np.empty(k)
        self._probe_vals = np.empty(k)

    def _plan_epoch(self, rng):
        m = self.bounds.memory
        L = self.epoch_length
        in_tail = self._epoch >= self.epochs
        forced = self.exploit_override(self._epoch) if self.exploit_override else None
        exploit = int(forced) if forced is not None else self.hedge.choose(rng)
        if in_tail:
            self._schedule = np.full(self.tail, exploit, dtype=np.int64)
            self._obs_slots = {}
            self.trace.append({"type": "epoch-plan", "round": self._round + 1,
                               "epoch": self._epoch, "exploit": exploit,
                               "truncated": True})
        else:
            starts = sample_exploration_starts(
                L, self.k, m, self.exploration_rng if self.exploration_rng is not None else rng)
            schedule = np.full(L, exploit, dtype=np.int64)
            slots = {}
            for arm in range(self.k):
                s = int(starts[arm])
                schedule[s:s + m + 1] = self.base_action
                schedule[s + m + 1:s + 2 * m + 2] = arm
                slots[s + m] = ("base", arm)
                slots[s + 2 * m + 1] = ("probe", arm)
            self._schedule = schedule
            self._obs_slots = slots
            self.trace.append({"type": "epoch-plan", "round": self._round + 1,
                               "epoch": self._epoch, "exploit": exploit,
                               "base_action": self.base_action,
                               "starts": {str(a): int(starts[a]) for a in range(self.k)}})
        self._pos = 0

    def choose(self, rng):
        if self._pos is None or self._pos >= len(self._schedule):
            if self._pos is not None:
                self._epoch += 1
            self._plan_epoch(rng)
        return int(self._schedule[self._pos])

    def observe(self, action, loss):
        slot = self._obs_slots.get(self._pos)
        if slot is not None:
            kind, arm = slot
            if kind == "base":
                self._base_vals[arm] = loss
            else:
                self._probe_vals[arm] = loss
        self._pos += 1
        self._round += 1
        if self._epoch < self.epochs and self._pos == self.epoch_length:
            estimates = (self._probe_vals - self._base_vals) / self.scale + 0.5
            estimates = np.array([self._admit(v, "epoch loss estimate")
                                  for v in estimates])
            self.hedge.update(estimates)


# ---------------------------------------------------------------------------
# successive elimination for i.i.d. losses with switching costs
# ---------------------------------------------------------------------------

def elimination_stage_lengths(horizon):
    """Stage lengths T_s = ceil(T^(1 - 2^-s)) and the stage count S, where S
    is the first index at which the cumulative lengths reach T."""
    lengths = []
    cum = 0
    s = 1
    while cum < horizon:
        ts = int(math.ceil(horizon ** (1.0 - 2.0 ** (-s)) - 1e-9))
        lengths.append(ts)
        cum += ts
        s += 1
    return lengths, len(lengths)


class SuccessiveElimination(Player):
    """Stage-doubling elimination: plays active arms in contiguous blocks,
    keeps arms within 2 C_s of the best empirical mean, and therefore switches
    at most K times per stage (K * S overall).

    C_s = sqrt(conf_const * (K / T_s) * ln(K S / delta)); with losses in [0,1]
    the Hoeffding-matched conf_const = 1/2 is the sensible default.
    """

    feedback = FeedbackModel.BANDIT

    def __init__(self, k, horizon, delta=0.05, conf_const=0.5):
        if not 0.0 < delta < 1.0:
            raise ConfigurationError("delta must lie in (0, 1)")
        if conf_const <= 0:
            raise ConfigurationError("conf_const must be positive")
        if horizon < k:
            raise ConfigurationError("horizon must be at least the number of arms")
        self.k = k
        self.horizon = int(horizon)
        self.delta = float(delta)
        self.conf_const = float(conf_const)
        self.stage_lengths, self.total_stages = elimination_stage_lengths(horizon)
        self.stage = 1
        self.active = list(range(k))
        self.active_history = [tuple(self.active)]
        self.sample_means = None
        self.best_empirical = None
        self.trace = []
        self._consumed = 0
        self._schedule = None
        self._pos = 0
        self._sums = None
        self._counts = None

    def radius(self, stage):
        ts = self.stage_lengths[stage - 1]
        return math.sqrt(self.conf_const * (self.k / ts)
                         * math.log(self.k * self.total_stages / self.delta))

    def _build_stage(self):
        ts = self.stage_lengths[self.stage - 1]
        n = min(ts, self.horizon - self._consumed)
        arms = self.active
        base, extra = divmod(n, len(arms))
        counts = [base + (1 if i < extra else 0) for i in range(len(arms))]
        self._schedule = np.repeat(np.array(arms, dtype=np.int64), counts)
        self._pos = 0
        self._sums = dict.fromkeys(arms, 0.0)
        self._counts = dict.fromkeys(arms, 0)

    def _finish_stage(self):
        arms = [a for a in self.active if self._counts[a] > 0]
        means = {a: self._sums[a] / self._counts[a] for a in arms}
        best = min(arms, key=lambda a: (means[a], a))
        cs = self.radius(self.stage)
        survivors = [a for a in arms if means[a] <= means[best] + 2.0 * cs]
        self.sample_means = means
        self.best_empirical = best
        self.trace.append({"type": "stage", "round": self._consumed,
                           "stage": self.stage, "active": list(self.active),
                           "sample_means": {str(a): means[a] for a in arms},
                           "best": best, "radius": cs,
                           "survivors": survivors})
        self.active = survivors
        self.active_history.append(tuple(survivors))
        self.stage += 1
        self._schedule = None

    def choose(self, rng):
        if self._schedule is None:
            self._build_stage()
        return int(self._schedule[self._pos])

    def observe(self, action, loss):
        self._sums[action] += loss
        self._counts[action] += 1
        self._pos += 1
        self._consumed += 1
        if self._pos == len(self._schedule):
            self._finish_stage()


def write_trace(player, path):
    """Dump a player's diagnostic trace as JSON lines (one event per line)."""
    events = getattr(player, "trace", [])
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
