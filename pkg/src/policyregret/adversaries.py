"""Construction and validation of materialized history-dependent loss processes.

Every constructor returns an :class:`AdversaryRealization`: a fully drawn,
immutable process f_1..f_T that can be evaluated on arbitrary counterfactual
histories.  A realization with memory m only ever looks at the last m+1
actions, so ``evaluate(t, window)`` takes a window of length min(t, m+1).

Each realization carries two validated constants:

* ``range_bound`` (C): for every t and any two histories,
  |f_t(x_1..x_t) - f_t(x'_1..x'_t)| <= C;
* ``drift_bounds`` (D_t): |f_t(x_1..x_t) - f_{t+1}(x_1..x_t, x_t)| <= D_t,
  the round-to-round movement when the last action is repeated.

For the generated processes these are computed exactly from the materialized
tables, except where a process has a conventional fixed constant (the paired
random walk with unit switching cost declares C = 2).
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math

import numpy as np

from .game import ConfigurationError

# Exhaustive range/drift scans are used when K^(m+1) * T fits this budget.
EXHAUSTIVE_SCAN_LIMIT = 10 ** 6


class AdversaryRealization:
    """A materialized loss process on rounds 1..horizon over k actions.

    ``evaluate`` is pure: equal arguments always return equal values.  The
    optional fast-path closures keep constant-sequence baselines and
    counterfactual rows O(T) for the structured processes.
    """

    def __init__(self, horizon, k, memory, evaluate_fn, range_bound, drift_bounds,
                 *, kind="custom", full_row_fn=None, constant_total_fn=None,
                 means=None, info=None):
        if horizon < 1:
            raise ConfigurationError("horizon >= 1 required")
        if k < 2:
            raise ConfigurationError("at least 2 actions required")
        self.horizon = int(horizon)
        self.k = int(k)
        self.memory = int(memory)
        self._evaluate = evaluate_fn
        self.range_bound = float(range_bound)
        self.drift_bounds = np.atleast_1d(np.asarray(drift_bounds, dtype=float))
        self.kind = kind
        self._full_row = full_row_fn
        self._constant_total = constant_total_fn
        self.means = None if means is None else np.asarray(means, dtype=float)
        self.info = dict(info or {})

    def evaluate(self, t, window):
        """Loss f_t on the given window of the last min(t, m+1) actions."""
        if not 1 <= t <= self.horizon:
            raise ConfigurationError(f"round {t} outside 1..{self.horizon}")
        want = min(t, self.memory + 1)
        if len(window) != want:
            raise ConfigurationError(
                f"round {t} expects a window of length {want}, got {len(window)}")
        return float(self._evaluate(t, tuple(window)))

    def full_row(self, t, prefix):
        """Vector of f_t(prefix, x) over all x; prefix = last min(t-1, m) actions."""
        if self._full_row is not None:
            return self._full_row(t, prefix)
        return np.array([self._evaluate(t, tuple(prefix) + (x,))
                         for x in range(self.k)], dtype=float)

    def constant_sequence_total(self, x, upto):
        """sum_{t<=upto} f_t(x..x) for the constant sequence on action x."""
        if self._constant_total is not None:
            return float(self._constant_total(x, upto))
        m = self.memory
        vals = np.array([self._evaluate(t, (x,) * min(t, m + 1))
                         for t in range(1, upto + 1)])
        return float(np.sum(vals))

    def max_drift(self, upto=None):
        """max_t D_t over steps 1..upto-1 (0.0 for a single-round process)."""
        upto = self.horizon if upto is None else upto
        if upto <= 1 or self.drift_bounds.size == 0:
            return 0.0
        return float(self.drift_bounds[:upto - 1].max())


# ---------------------------------------------------------------------------
# oblivious processes (memory 0)
# ---------------------------------------------------------------------------

def _table_realization(table, *, kind, means=None, info=None):
    table = np.ascontiguousarray(table, dtype=float)
    T, k = table.shape
    spreads = table.max(axis=1) - table.min(axis=1)
    drift = np.abs(np.diff(table, axis=0)).max(axis=1) if T > 1 else np.zeros(0)

    def ev(t, w):
        return table[t - 1, w[-1]]

    def row(t, prefix):
        return table[t - 1].copy()

    def ctotal(x, upto):
        # np.sum keeps this bit-identical to a direct column-sum oracle
        return np.sum(table[:upto, x])

    full_info = {"table": table}
    full_info.update(info or {})
    return AdversaryRealization(
        T, k, 0, ev, float(spreads.max()), drift, kind=kind,
        full_row_fn=row, constant_total_fn=ctotal, means=means, info=full_info)


def realize_oblivious(loss_table):
    """Memory-0 realization backed by a T x K table of per-round losses."""
    table = np.asarray(loss_table, dtype=float)
    if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 2:
        raise ConfigurationError("loss table must be T x K with T >= 1, K >= 2")
    if not np.isfinite(table).all():
        raise ConfigurationError("loss table entries must be finite")
    return _table_realization(table, kind="table")


def realize_iid(means, T, rng, noise="bernoulli", sigma=0.1):
    """Memory-0 i.i.d. process; per-action means are stored for pseudo-regret.

    ``noise``: "none" repeats the means, "bernoulli" draws 0/1 losses with the
    given means, "gaussian" adds N(0, sigma^2), "uniform" draws Uniform[0,1]
    outright (means must then all be 0.5).
    """
    mu = np.asarray(means, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise ConfigurationError("non-empty mean vector required")
    if mu.size < 2:
        raise ConfigurationError("at least 2 actions required")
    k = mu.size
    if noise == "none":
        table = np.tile(mu, (T, 1))
    elif noise == "bernoulli":
        if np.any(mu < 0) or np.any(mu > 1):
            raise ConfigurationError("bernoulli means must lie in [0, 1]")
        table = (rng.random((T, k)) < mu).astype(float)
    elif noise == "gaussian":
        table = mu + sigma * rng.standard_normal((T, k))
    elif noise == "uniform":
        if not np.allclose(mu, 0.5):
            raise ConfigurationError("uniform noise implies means of 0.5")
        table = rng.random((T, k))
    else:
        raise ConfigurationError(f"unknown noise kind: {noise!r}")
    return _table_realization(table, kind="iid", means=mu,
                              info={"noise": noise, "mu_star": float(mu.min())})


# ---------------------------------------------------------------------------
# switching-cost wrapper (memory 1)
# ---------------------------------------------------------------------------

def wrap_switching_cost(inner, cost=1.0):
    """Charge ``cost`` on top of an oblivious process whenever the action changes.

    f_1(x) = l_1(x) and f_t(x_{t-1}, x_t) = l_t(x_t) + cost * 1{x_t != x_{t-1}}.
    """
    if inner.memory != 0:
        raise ConfigurationError("switching-cost wrapper needs an oblivious inner process")
    if cost < 0:
        raise ConfigurationError("cost must be nonnegative")
    k = inner.k
    arange = np.arange(k)
    inner_ev = inner._evaluate

    def ev(t, w):
        if t == 1:
            return inner_ev(1, (w[-1],))
        prev, cur = w
        v = inner_ev(t, (cur,))
        return v + cost if cur != prev else v

    def row(t, prefix):
        base = inner.full_row(t, ())
        if t == 1:
            return base
        return base + cost * (arange != prefix[-1])

    def ctotal(x, upto):
        return inner.constant_sequence_total(x, upto)

    T = inner.horizon
    table = inner.info.get("table")
    if table is not None and T > 1:
        diffs = table[:-1] - table[1:]
        drift = np.maximum(np.abs(diffs), np.abs(diffs + cost)).max(axis=1)
        drift[0] = np.abs(diffs[0]).max()  # no switch term inside f_1
    else:
        drift = inner.drift_bounds + cost
        if drift.size:
            drift = drift.copy()
            drift[0] = inner.drift_bounds[0]
    return AdversaryRealization(
        T, k, 1, ev, inner.range_bound + cost, drift, kind="switching-cost",
        full_row_fn=row, constant_total_fn=ctotal, means=inner.means,
        info={"inner": inner, "cost": float(cost), **{kk: vv for kk, vv in inner.info.items() if kk != "table"}})


# ---------------------------------------------------------------------------
# paired random walk (the two-action stochastic lower-bound process)
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RandomWalkSpec:
    """Two actions whose losses follow one Gaussian random walk, the second
    shifted by Z * epsilon with Z = +/-1 drawn equiprobably.

    ``epsilon`` defaults to horizon**(-1/3).  With ``truncated`` every
    increment xi_t is resampled until |xi_t| < sqrt(3 * log(2t/delta)), which
    caps the realized drift.  ``with_switching_cost`` wraps the pair with a
    unit-cost (by default) switch surcharge, giving a memory-1 process.
    """

    horizon: int
    epsilon: float | None = None
    truncated: bool = False
    truncation_delta: float = 1.0 / 80.0
    with_switching_cost: bool = True
    cost: float = 1.0


def increment_clip_level(t, delta):
    """Resampling threshold sqrt(3 * log(2t/delta)) for walk increments."""
    return math.sqrt(3.0 * math.log(2.0 * t / delta))


def realize_random_walk(spec, rng):
    """Materialize a :class:`RandomWalkSpec`.

    Draw order (relied on by replay tooling): first the sign Z via one
    ``rng.random()`` call (Z = +1 iff it is < 0.5), then the T increments via
    ``rng.standard_normal(T)``; the truncated variant then redraws violating
    increments in index order, one ``rng.standard_normal(n)`` call per sweep.
    """
    T = int(spec.horizon)
    if T < 1:
        raise ConfigurationError("horizon >= 1 required")
    eps = T ** (-1.0 / 3.0) if spec.epsilon is None else float(spec.epsilon)
    if not 0.0 < eps <= 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1], got {eps}")
    z = 1.0 if rng.random() < 0.5 else -1.0
    xi = rng.standard_normal(T)
    if spec.truncated:
        if not 0.0 < spec.truncation_delta < 1.0:
            raise ConfigurationError("truncation_delta must lie in (0, 1)")
        clips = np.array([increment_clip_level(t, spec.truncation_delta)
                          for t in range(1, T + 1)])
        bad = np.abs(xi) >= clips
        while np.any(bad):
            xi[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(xi) >= clips
    l1 = np.cumsum(xi)
    l2 = l1 + z * eps
    info = {"z": z, "epsilon": eps, "increments": xi, "l1": l1, "l2": l2,
            "truncated": spec.truncated, "truncation_delta": spec.truncation_delta,
            "with_switching_cost": spec.with_switching_cost}
    bare = _table_realization(np.column_stack([l1, l2]), kind="random-walk", info=info)
    if not spec.with_switching_cost:
        return bare
    wrapped = wrap_switching_cost(bare, cost=spec.cost)
    wrapped.kind = "random-walk"
    wrapped.info.update(info)
    if spec.cost == 1.0:
        wrapped.range_bound = 2.0  # conventional constant for the unit-cost pair
    return wrapped


# ---------------------------------------------------------------------------
# one-round echo of a switching-cost game (memory 2)
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class MemoryTwoReductionSpec:
    """Memory-2 process that replays a switching-cost walk one round late.

    Round t charges every current action the inner process's round t-1 value
    on (x_{t-2}, x_{t-1}); f_1 is identically 0.  The current action never
    affects the loss, so full information reveals nothing new.
    """

    horizon: int
    inner: RandomWalkSpec | None = None


def realize_memory_two_reduction(spec, rng):
    T = int(spec.horizon)
    if T < 2:
        raise ConfigurationError("horizon >= 2 required")
    inner_spec = spec.inner
    if inner_spec is None:
        inner_spec = RandomWalkSpec(horizon=T - 1, with_switching_cost=True)
    if not inner_spec.with_switching_cost:
        raise ConfigurationError("inner walk must carry the switching cost")
    if inner_spec.horizon < T - 1:
        raise ConfigurationError(
            f"inner horizon {inner_spec.horizon} < T - 1 = {T - 1}")
    inner = realize_random_walk(inner_spec, rng)
    k = inner.k
    cost = inner_spec.cost
    l1, l2 = inner.info["l1"], inner.info["l2"]
    lt = np.column_stack([l1, l2])  # lt[s-1, b] = inner oblivious loss of action b at round s
    inner_ev = inner._evaluate

    def ev(t, w):
        if t == 1:
            return 0.0
        if t == 2:
            return inner_ev(1, (w[0],))
        return inner_ev(t - 1, (w[0], w[1]))

    def row(t, prefix):
        if t == 1:
            v = 0.0
        elif t == 2:
            v = inner_ev(1, (prefix[0],))
        else:
            v = inner_ev(t - 1, (prefix[0], prefix[1]))
        return np.full(k, float(v))

    def ctotal(x, upto):
        if upto <= 1:
            return 0.0
        return inner.constant_sequence_total(x, upto - 1)

    # Exact per-step drift when the last action is repeated, enumerated over
    # the free window coordinates (a, b, c): step 1 compares 0 with the round-1
    # echo, step 2 compares the echo of round 1 with round 2, and so on.
    drift = np.zeros(max(T - 1, 0))
    if T > 1:
        drift[0] = np.abs(lt[0]).max()
    if T > 2:
        step2 = [abs(lt[0, a] - (lt[1, b] + cost * (a != b)))
                 for a in range(k) for b in range(k)]
        drift[1] = max(step2)
    if T > 3:
        # steps t = 3..T-1: max over (a,b,c) of |fhat_{t-1}(a,b) - fhat_t(b,c)|
        prev = lt[1:-1]  # inner rounds 2..T-2, value index by b
        nxt = lt[2:]     # inner rounds 3..T-1, value index by c
        worst = np.zeros(prev.shape[0])
        for a, b, c in itertools.product(range(k), repeat=3):
            vals = np.abs((prev[:, b] + cost * (a != b)) - (nxt[:, c] + cost * (b != c)))
            worst = np.maximum(worst, vals)
        drift[2:] = worst
    return AdversaryRealization(
        T, k, 2, ev, 2.0, drift, kind="memory-two-reduction",
        full_row_fn=row, constant_total_fn=ctotal,
        info={"inner": inner, "z": inner.info["z"], "epsilon": inner.info["epsilon"],
              "cost": cost})


# ---------------------------------------------------------------------------
# arbitrary bounded-memory kernels
# ---------------------------------------------------------------------------

def realize_bounded_memory(kernel, m, T, k, rng=None, scan_limit=EXHAUSTIVE_SCAN_LIMIT):
    """Memory-m realization from an explicit kernel (t, window) -> loss.

    Range and drift constants are computed by exhaustive window scan when
    k^(m+1) * T <= ``scan_limit``, otherwise by Monte Carlo sampling (an
    ``rng`` is then required).  A kernel that is undefined or non-finite on a
    touched window raises a configuration error.
    """
    if m < 0 or T < 1 or k < 2:
        raise ConfigurationError("need m >= 0, T >= 1, k >= 2")

    def probe(t, w):
        try:
            v = kernel(t, w)
        except (KeyError, IndexError) as exc:
            raise ConfigurationError(
                f"kernel undefined for round {t}, window {w}") from exc
        v = float(v)
        if not math.isfinite(v):
            raise ConfigurationError(
                f"kernel returned non-finite value at round {t}, window {w}")
        return v

    def windows_at(t):
        return itertools.product(range(k), repeat=min(t, m + 1))

    worst_gap = 0.0
    drift = np.zeros(max(T - 1, 0))
    if k ** (m + 1) * T <= scan_limit:
        for t in range(1, T + 1):
            vals = {w: probe(t, w) for w in windows_at(t)}
            vv = list(vals.values())
            worst_gap = max(worst_gap, max(vv) - min(vv))
            if t < T:
                for w, v in vals.items():
                    nxt = (w + (w[-1],))[-min(t + 1, m + 1):]
                    drift[t - 1] = max(drift[t - 1], abs(v - probe(t + 1, nxt)))
    else:
        if rng is None:
            raise ConfigurationError(
                "domain too large for an exhaustive scan; pass an rng for sampling")
        budget = max(4 * T, 10 ** 5)
        per_t = max(2, budget // T)
        for t in range(1, T + 1):
            ws = [tuple(rng.integers(0, k, size=min(t, m + 1))) for _ in range(per_t)]
            vals = [probe(t, w) for w in ws]
            worst_gap = max(worst_gap, max(vals) - min(vals))
            if t < T:
                for w, v in zip(ws, vals):
                    nxt = (w + (w[-1],))[-min(t + 1, m + 1):]
                    drift[t - 1] = max(drift[t - 1], abs(v - probe(t + 1, nxt)))

    return AdversaryRealization(T, k, m, probe, worst_gap, drift,
                                kind="bounded-memory")


# ---------------------------------------------------------------------------
# bound validation
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class BoundsReport:
    range_ok: bool
    drift_ok: bool
    worst_gap: float
    worst_drift: float
    checked_exhaustively: bool


def _drift_limit_at(drift_limit, t):
    if callable(drift_limit):
        return float(drift_limit(t))
    arr = np.atleast_1d(np.asarray(drift_limit, dtype=float))
    if arr.size == 1:
        return float(arr[0])
    return float(arr[t - 1])


def validate_bounds(realization, sample_budget=100_000, rng=None,
                    range_limit=None, drift_limit=None) -> BoundsReport:
    """Check the declared (or supplied) range and drift limits on a realization.

    Exhaustive over all windows when k^(m+1) * T is small enough, Monte Carlo
    otherwise.  A discovered violation is always reported; a sampled pass is
    only evidence, not proof.
    """
    T, k, m = realization.horizon, realization.k, realization.memory
    ev = realization._evaluate
    if range_limit is None:
        range_limit = realization.range_bound
    if drift_limit is None:
        drift_limit = realization.drift_bounds if T > 1 else 0.0

    worst_gap = 0.0
    worst_drift = 0.0
    range_ok = True
    drift_ok = True
    exhaustive = k ** (m + 1) * T <= EXHAUSTIVE_SCAN_LIMIT

    def beyond(value, limit):
        # float-noise slack; real violations dwarf this
        return value > limit + 1e-9 * (1.0 + abs(limit))

    def account_drift(t, value):
        nonlocal worst_drift, drift_ok
        worst_drift = max(worst_drift, value)
        if beyond(value, _drift_limit_at(drift_limit, t)):
            drift_ok = False

    if exhaustive:
        for t in range(1, T + 1):
            vals = {w: ev(t, w) for w in itertools.product(range(k), repeat=min(t, m + 1))}
            vv = np.array(list(vals.values()))
            gap = float(vv.max() - vv.min())
            worst_gap = max(worst_gap, gap)
            if beyond(gap, range_limit):
                range_ok = False
            if t < T:
                for w, v in vals.items():
                    nxt = (w + (w[-1],))[-min(t + 1, m + 1):]
                    account_drift(t, abs(v - ev(t + 1, nxt)))
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        per_t = max(2, int(sample_budget) // T)
        for t in range(1, T + 1):
            wlen = min(t, m + 1)
            ws = [tuple(rng.integers(0, k, size=wlen)) for _ in range(per_t)]
            vals = [ev(t, w) for w in ws]
            gap = max(vals) - min(vals)
            worst_gap = max(worst_gap, gap)
            if beyond(gap, range_limit):
                range_ok = False
            if t < T:
                w, v = ws[0], vals[0]
                nxt = (w + (w[-1],))[-min(t + 1, m + 1):]
                account_drift(t, abs(v - ev(t + 1, nxt)))

    return BoundsReport(range_ok=range_ok, drift_ok=drift_ok,
                        worst_gap=worst_gap, worst_drift=worst_drift,
                        checked_exhaustively=exhaustive)


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def save_loss_table(realization, path):
    """Write an oblivious realization as CSV with header t,a0,a1,..."""
    table = realization.info.get("table")
    if realization.memory != 0 or table is None:
        raise ConfigurationError("only table-backed oblivious realizations export this way")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"a{i}" for i in range(realization.k)])
        for t, row in enumerate(table, start=1):
            writer.writerow([t] + [_fmt(v) for v in row])


def load_loss_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "t" or any(h != f"a{i}" for i, h in enumerate(header[1:])):
            raise ConfigurationError(f"unexpected loss-table header: {header}")
        rows = [[float(v) for v in row[1:]] for row in reader]
    return realize_oblivious(np.array(rows))


def save_random_walk(realization, path):
    """Write a walk realization as CSV with columns t,l1,l2,z,epsilon."""
    info = realization.info
    if "l1" not in info:
        raise ConfigurationError("realization does not carry a paired walk")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "l1", "l2", "z", "epsilon"])
        for t in range(len(info["l1"])):
            writer.writerow([t + 1, _fmt(info["l1"][t]), _fmt(info["l2"][t]),
                             _fmt(info["z"]), _fmt(info["epsilon"])])


def load_random_walk(path, with_switching_cost=True, cost=1.0):
    """Rebuild a walk realization from an exported CSV (table replay, no RNG)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "l1", "l2", "z", "epsilon"]:
            raise ConfigurationError(f"unexpected walk header: {header}")
        rows = list(reader)
    l1 = np.array([float(r[1]) for r in rows])
    l2 = np.array([float(r[2]) for r in rows])
    z = float(rows[0][3])
    eps = float(rows[0][4])
    info = {"z": z, "epsilon": eps, "l1": l1, "l2": l2,
            "increments": np.diff(np.concatenate([[0.0], l1])),
            "truncated": None, "with_switching_cost": with_switching_cost}
    bare = _table_realization(np.column_stack([l1, l2]), kind="random-walk", info=info)
    if not with_switching_cost:
        return bare
    wrapped = wrap_switching_cost(bare, cost=cost)
    wrapped.kind = "random-walk"
    wrapped.info.update(info)
    if cost == 1.0:
        wrapped.range_bound = 2.0
    return wrapped
