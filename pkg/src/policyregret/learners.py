"""Textbook online learners behind the uniform :class:`~policyregret.game.Player`
interface: exponential weights (Hedge), a lazy-grid perturbed leader, and the
high-probability adversarial bandit algorithm Exp3.P.

All three consume losses in [0, 1]; a value outside that interval (beyond
float noise) is a contract violation, because the reductions layered on top
are responsible for normalization.
"""

from __future__ import annotations

import math

import numpy as np

from .game import ConfigurationError, ContractViolation, FeedbackModel, Player

_RANGE_TOL = 1e-9


def _check_unit_losses(values, who):
    v = np.asarray(values, dtype=float)
    if v.min() < -_RANGE_TOL or v.max() > 1.0 + _RANGE_TOL:
        raise ContractViolation(
            f"{who} requires losses in [0, 1], got values in "
            f"[{v.min():.6g}, {v.max():.6g}]")
    return np.clip(v, 0.0, 1.0)


def _draw_from(probs, rng):
    return int(np.searchsorted(np.cumsum(probs), rng.random()))


class Hedge(Player):
    """Exponential weights over full loss vectors (Freund & Schapire).

    After u updates the distribution is proportional to exp(-eta * L) where L
    is the cumulative loss vector.  With a declared number of feedback events
    N the rate is eta = sqrt(8 ln k / N); otherwise the anytime schedule
    eta_t = sqrt(8 ln k / t) is used, with t the current round.
    """

    feedback = FeedbackModel.FULL_INFORMATION

    def __init__(self, k, eta=None, feedback_count=None):
        if k < 2:
            raise ConfigurationError("k >= 2 required")
        self.k = k
        if eta is not None and eta <= 0:
            raise ConfigurationError("eta must be positive")
        self.eta = eta
        if feedback_count is not None and eta is None:
            self.eta = math.sqrt(8.0 * math.log(k) / feedback_count)
        self.cumulative = np.zeros(k)
        self.updates = 0

    def _rate(self):
        if self.eta is not None:
            return self.eta
        return math.sqrt(8.0 * math.log(self.k) / (self.updates + 1))

    def distribution(self):
        z = -self._rate() * self.cumulative
        z -= z.max()
        w = np.exp(z)
        return w / w.sum()

    def update(self, losses):
        losses = _check_unit_losses(losses, "hedge")
        if losses.shape != (self.k,):
            raise ConfigurationError(f"expected a loss vector of length {self.k}")
        self.cumulative += losses
        self.updates += 1

    def choose(self, rng):
        return _draw_from(self.distribution(), rng)

    def observe(self, action, feedback):
        self.update(feedback)


class FollowLazyLeader(Player):
    """Perturbed leader with a single lazily drawn grid perturbation.

    One offset g ~ Uniform[0, spacing)^k is drawn on first use, defining the
    grid g + spacing * Z^k.  Each round the player finds the unique grid point
    p with p(x) in [S(x), S(x) + spacing) coordinatewise, where S is the
    cumulative loss vector, and plays argmin_x p(x).  Marginally p - S is
    uniform on the cube, so each round looks like a fresh uniformly perturbed
    leader, but the action can only change when the moving cube crosses a grid
    hyperplane: with spacing sqrt(T) both the expected regret and the expected
    number of switches on [0,1] losses are O(sqrt(T)).

    ``disable_perturbation`` is a test hook that plays the plain leader
    argmin S; ``grid_offset`` pins the offset draw for reproducible tests.
    """

    feedback = FeedbackModel.FULL_INFORMATION

    def __init__(self, k, horizon=None, epsilon=None, grid_offset=None,
                 disable_perturbation=False):
        if k < 2:
            raise ConfigurationError("k >= 2 required")
        if epsilon is None:
            if horizon is None:
                raise ConfigurationError("need a horizon or an explicit epsilon")
            epsilon = 1.0 / math.sqrt(horizon)
        if epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        self.k = k
        self.spacing = 1.0 / epsilon
        self.cumulative = np.zeros(k)
        self.disable_perturbation = disable_perturbation
        self._offset = None if grid_offset is None else np.asarray(grid_offset, float)

    def choose(self, rng):
        if self.disable_perturbation:
            return int(np.argmin(self.cumulative))
        if self._offset is None:
            self._offset = rng.uniform(0.0, self.spacing, self.k)
        p = self._offset + self.spacing * np.ceil(
            (self.cumulative - self._offset) / self.spacing)
        return int(np.argmin(p))

    def observe(self, action, feedback):
        losses = _check_unit_losses(feedback, "lazy leader")
        if losses.shape != (self.k,):
            raise ConfigurationError(f"expected a loss vector of length {self.k}")
        self.cumulative += losses


def importance_weighted_losses(probs, action, loss):
    """Raw importance-weighted loss estimate: loss/p at the played arm, 0 elsewhere.

    For a fixed probability vector the expectation over the arm draw equals
    the true loss vector.
    """
    probs = np.asarray(probs, dtype=float)
    est = np.zeros_like(probs)
    est[action] = loss / probs[action]
    return est


class Exp3P(Player):
    """Exp3.P with known horizon, expressed in losses (gain = 1 - loss).

    Standard tuning (Bubeck & Cesa-Bianchi 2012, sec. 3.2):
    beta = sqrt(ln(k/delta) / (T k)), eta = 0.95 sqrt(ln k / (T k)),
    gamma = min(1, 1.05 sqrt(k ln k / T)); each round's gain estimate is
    (gain * 1{played} + beta) / p_i, fed to exponential weights mixed with
    gamma/k uniform exploration.  Guarantees O(sqrt(T k log(k/delta)))
    standard regret with probability 1 - delta, even against adaptive
    opponents.
    """

    feedback = FeedbackModel.BANDIT

    def __init__(self, k, horizon, delta=None):
        if k < 2 or horizon < 1:
            raise ConfigurationError("need k >= 2 and horizon >= 1")
        if delta is None:
            delta = 1.0 / horizon
        if not 0.0 < delta < 1.0:
            raise ConfigurationError("delta must lie in (0, 1)")
        self.k = k
        self.horizon = int(horizon)
        self.delta = float(delta)
        self.beta = math.sqrt(math.log(k / delta) / (horizon * k))
        self.eta = 0.95 * math.sqrt(math.log(k) / (horizon * k))
        self.gamma = min(1.0, 1.05 * math.sqrt(k * math.log(k) / horizon))
        self._cum_gain_est = np.zeros(k)
        self._pending = None

    def probabilities(self):
        z = self.eta * self._cum_gain_est
        z -= z.max()
        w = np.exp(z)
        p = (1.0 - self.gamma) * w / w.sum() + self.gamma / self.k
        return p / p.sum()

    def choose(self, rng):
        p = self.probabilities()
        self._pending = p
        return _draw_from(p, rng)

    def update(self, action, loss):
        loss = float(_check_unit_losses([loss], "exp3p")[0])
        p = self._pending if self._pending is not None else self.probabilities()
        self._pending = None
        est = self.beta / p
        est[action] += (1.0 - loss) / p[action]
        self._cum_gain_est += est

    def observe(self, action, feedback):
        self.update(action, feedback)
