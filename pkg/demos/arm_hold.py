"""Three-link planar arm: reach one of two joint configurations and hold it.

Uses the bundled ``arm_reach`` scenario: the joint angles must stay within
0.01 rad of either target configuration for steps 40..50. Both start states
are solved from a gravity-compensating initial guess.

    python3 demos/arm_hold.py
"""

import numpy as np

from stlddp.runner import run_scenario
from stlddp.scenario import bundled_scenarios, load_scenario

scenario = load_scenario(bundled_scenarios()["arm_reach"])
arm = scenario.model
for name, pred in scenario.predicates.items():
    tip = arm.forward_kinematics(pred.center)
    print(f"{name}: q_nom = {np.round(pred.center, 3)}, end effector at {np.round(tip, 3)}")

for i, x0 in enumerate(scenario.initial_states):
    outcome = run_scenario(scenario, x0_index=i, write=False)
    r = outcome.report
    Y = outcome.result.trajectory.Y
    print(f"\nstart {i}: q0 = {np.round(x0[:3], 3)}")
    print(f"  {r.verdict}, exact robustness {r.exact_robustness:.5f}, "
          f"{r.iterations} iterations, {r.wall_ms:.0f} ms")
    for name, pred in scenario.predicates.items():
        d = np.linalg.norm(Y[40:51] - pred.center, axis=1).max()
        print(f"  max distance to {name} over t=40..50: {d:.5f}")
    tau = outcome.result.trajectory.U
    print(f"  peak joint torque {np.abs(tau).max():.2f} N m")
