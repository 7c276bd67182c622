"""A driven bouncer with restitution 0.5 accumulates impacts in finite time.

Flight times shrink geometrically by the restitution factor, so the impact
times converge to 2 v0 / (g (1 - e)).  The executor stops with
``zeno_suspected`` once consecutive impacts get closer than its threshold.
"""

import numpy as np

from hybrid_routh import IntegratorConfig, StateTQ, bouncer_1d, execute

v0, e, g = 2.0, 0.5, 9.81
traj = execute(bouncer_1d(1.0, e, g), StateTQ([0.0], [v0]), IntegratorConfig(dt=1e-3, t_max=5.0))
gaps = np.diff(np.concatenate([[0.0], traj.impact_times]))
limit = 2 * v0 / g / (1 - e)

print(f"termination: {traj.termination.value} ({traj.message})")
print(f"impacts: {len(traj.impacts)}, last at t = {traj.final_time:.9f}, predicted limit {limit:.9f}")
print("successive gap ratios:", np.round(gaps[1:6] / gaps[:5], 9))
