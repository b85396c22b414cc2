"""The headline separation at demo scale: sqrt(T) policy regret is attainable
with full information under switching costs, while bandit feedback against
the paired walk forces T^(2/3).

Two sweeps, each fitting log(mean regret) on log(T):

* full information: the rescaled lazy leader against i.i.d. uniform losses
  with a unit switching cost -- expect a fitted exponent near 0.5;
* bandit feedback: the drift-differenced Exp3.P and the epoch mini-batch
  Hedge against the paired walk -- expect exponents at or above 2/3.

The full acceptance suite runs the same experiments at R = 50; this demo
uses fewer repetitions so it finishes in under a minute.
"""

from policyregret import ExperimentSpec, run_sweep

GRID = [2 ** i for i in range(10, 15)]
REPS = 10


def show(label, spec):
    result = run_sweep(spec)
    print(f"{label}: fitted exponent alpha = {result.alpha:.3f} "
          f"(95% CI {result.alpha_ci[0]:.3f}..{result.alpha_ci[1]:.3f})")
    for row in result.aggregates["policy_regret"]:
        print(f"    T={row['T']:>6}: mean policy regret {row['mean']:9.1f} "
              f"(se {row['se']:.1f})")
    if result.errors:
        skipped = sorted({e['T'] for e in result.errors})
        print(f"    infeasible horizons skipped: {skipped}")


show("full info / lazy leader",
     ExperimentSpec(adversary={"kind": "iid-uniform", "switching_cost": 1.0},
                    player="fll-switching", horizon_grid=GRID,
                    repetitions=REPS, master_seed=1,
                    metrics=("policy_regret",)))

show("bandit / drift-differenced Exp3.P",
     ExperimentSpec(adversary="random-walk", player="exp3p-drift",
                    horizon_grid=GRID, repetitions=REPS, master_seed=2,
                    metrics=("policy_regret",)))

show("bandit / mini-batch Hedge",
     ExperimentSpec(adversary="random-walk",
                    player={"kind": "minibatch-hedge", "m": 1},
                    horizon_grid=GRID, repetitions=REPS, master_seed=3,
                    metrics=("policy_regret",)))
