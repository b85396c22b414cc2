"""Round loop, transcripts, and regret accounting for history-dependent losses.

A game runs for T rounds between a player and a materialized loss process
(see :mod:`policyregret.adversaries`).  On round t the player picks an action
X_t, suffers f_t(X_1..X_t), and receives feedback according to the feedback
model: the whole vector f_t(X_1..X_{t-1}, x) under full information, or only
the scalar f_t(X_1..X_t) under bandit feedback.

Two regret notions are computed from a finished transcript:

* policy regret  -- sum_t f_t(X_1..X_t) - min_x sum_t f_t(x..x), i.e. the
  comparator replays the whole game with a constant action;
* standard regret -- sum_t f_t(X_1..X_t) - min_x sum_t f_t(X_1..X_{t-1}, x),
  i.e. the comparator only substitutes the final action each round.

The two coincide for oblivious (memory 0) processes and can differ wildly
otherwise, which is the whole point of measuring both.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np


class ConfigurationError(ValueError):
    """A game, adversary, player, or config was set up inconsistently."""


class ContractViolation(RuntimeError):
    """A runtime value broke a declared interface contract (e.g. a loss
    fed to a learner fell outside [0, 1])."""


class FeedbackModel(enum.Enum):
    FULL_INFORMATION = "full"
    BANDIT = "bandit"


@dataclasses.dataclass
class GameTranscript:
    """Per-round record of one finished game.

    ``feedback`` has shape (T, K) under full information and (T,) under
    bandit feedback; under bandit feedback the engine records exactly one
    scalar per round, which is also all the player ever saw.
    ``switches[t] = 1`` iff ``actions[t] != actions[t-1]`` (and 0 at t=0).
    """

    horizon: int
    actions: np.ndarray
    incurred_losses: np.ndarray
    feedback: np.ndarray
    switches: np.ndarray
    feedback_model: FeedbackModel


@dataclasses.dataclass
class RegretLedger:
    policy_regret: float
    standard_regret: float
    switch_count: int
    best_constant_action: int


class Player:
    """Interface driven by :func:`play_game`.

    ``feedback`` declares what the player consumes.  A bandit player may be
    run under either feedback model (it is handed the scalar it would have
    seen anyway); a full-information player cannot run under bandit feedback.
    """

    feedback = FeedbackModel.FULL_INFORMATION
    k: int = 0

    def choose(self, rng) -> int:
        raise NotImplementedError

    def observe(self, action, feedback) -> None:
        pass


class ConstantPlayer(Player):
    """Plays one fixed action forever."""

    feedback = FeedbackModel.BANDIT

    def __init__(self, k, action=0):
        if not 0 <= action < k:
            raise ConfigurationError(f"action {action} outside [0, {k})")
        self.k = k
        self.action = int(action)

    def choose(self, rng):
        return self.action


class UniformRandomPlayer(Player):
    """Draws a fresh uniform action every round."""

    feedback = FeedbackModel.BANDIT

    def __init__(self, k):
        self.k = k

    def choose(self, rng):
        return int(rng.integers(self.k))


class AlternatingPlayer(Player):
    """Cycles deterministically through the actions, switching every round."""

    feedback = FeedbackModel.BANDIT

    def __init__(self, k):
        self.k = k
        self._next = 0

    def choose(self, rng):
        a = self._next
        self._next = (self._next + 1) % self.k
        return a


def switch_count(actions) -> int:
    """Number of indices t >= 1 with actions[t] != actions[t-1]."""
    a = np.asarray(actions)
    if a.size == 0:
        raise ConfigurationError("switch_count needs a non-empty action sequence")
    return int(np.count_nonzero(a[1:] != a[:-1]))


def play_game(realization, player, T, feedback, rng) -> GameTranscript:
    """Run the round loop and return the finished transcript.

    ``rng`` is the player's randomness stream; the realization is already
    materialized and is never mutated.  The player's round-t decision can
    only depend on feedback from rounds 1..t-1 plus ``rng``.
    """
    T = int(T)
    if T < 1:
        raise ConfigurationError("T >= 1 required")
    if realization.horizon < T:
        raise ConfigurationError(
            f"realization covers rounds 1..{realization.horizon} but the game needs T={T}")
    if realization.k != player.k:
        raise ConfigurationError(
            f"player is configured for {player.k} actions, realization has {realization.k}")
    full = feedback is FeedbackModel.FULL_INFORMATION
    if not full and player.feedback is FeedbackModel.FULL_INFORMATION:
        raise ConfigurationError(
            "a full-information player cannot run under bandit feedback")

    k = realization.k
    m = realization.memory
    actions = np.empty(T, dtype=np.int64)
    incurred = np.empty(T, dtype=float)
    fb = np.empty((T, k), dtype=float) if full else np.empty(T, dtype=float)
    evaluate = realization._evaluate

    for i in range(T):
        t = i + 1
        x = player.choose(rng)
        if not 0 <= x < k:
            raise ConfigurationError(f"player chose action {x} outside [0, {k})")
        actions[i] = x
        lo = i - m if i > m else 0
        loss = evaluate(t, tuple(actions[lo:i + 1]))
        incurred[i] = loss
        if full:
            row = realization.full_row(t, tuple(actions[max(0, i - m):i]))
            fb[i] = row
            if player.feedback is FeedbackModel.BANDIT:
                player.observe(x, float(row[x]))
            else:
                player.observe(x, row)
        else:
            fb[i] = loss
            player.observe(x, float(loss))

    switches = np.zeros(T, dtype=np.int64)
    if T > 1:
        switches[1:] = actions[1:] != actions[:-1]
    return GameTranscript(horizon=T, actions=actions, incurred_losses=incurred,
                          feedback=fb, switches=switches, feedback_model=feedback)


def constant_baseline(realization, T):
    """Total loss of each constant action sequence, as a length-K vector."""
    return np.array([realization.constant_sequence_total(x, T)
                     for x in range(realization.k)], dtype=float)


def policy_regret(transcript, realization) -> RegretLedger:
    """Full regret ledger for a transcript played against ``realization``.

    Ties in the best constant action break toward the lowest index.
    """
    T = transcript.horizon
    total = float(np.sum(transcript.incurred_losses))
    baseline = constant_baseline(realization, T)
    best = int(np.argmin(baseline))
    return RegretLedger(
        policy_regret=total - float(baseline[best]),
        standard_regret=standard_regret(transcript, realization),
        switch_count=switch_count(transcript.actions),
        best_constant_action=best,
    )


def standard_regret(transcript, realization) -> float:
    """sum_t f_t(X_1..X_t) - min_x sum_t f_t(X_1..X_{t-1}, x)."""
    T = transcript.horizon
    actions = transcript.actions
    m = realization.memory
    rows = np.empty((T, realization.k), dtype=float)
    for i in range(T):
        rows[i] = realization.full_row(i + 1, tuple(actions[max(0, i - m):i]))
    # per-column np.sum keeps this bit-identical to the constant-sequence path
    totals = np.array([np.sum(rows[:, x]) for x in range(realization.k)])
    return float(np.sum(transcript.incurred_losses) - totals.min())
