"""Two ways to hard-constrain a 1D two-material bar, against a soft baseline.

The bar has kappa = 0.1 on the left half and 1 on the right, unit source and
u = 0 at both ends.  We first show that the hard ansatzes satisfy the end and
interface conditions for arbitrary network weights, then train each kind for
a short budget.  Full-length runs live in the shipped presets
(``hardpinn run p1_window``).

Run:  python demos/02_two_materials_1d.py [iterations]
"""

import sys

import numpy as np

from hardpinn.buffer import BufferAnsatz1D
from hardpinn.diagnostics import residuals_1d
from hardpinn.problems import problem1
from hardpinn.soft import SoftAnsatz
from hardpinn.training import TrainConfig, collocation_1d, train
from hardpinn.window_ansatz import WindowAnsatz1D

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
problem = problem1()
kinds = {
    "window": WindowAnsatz1D(problem),
    "buffer": BufferAnsatz1D(problem),
    "soft_multinet": SoftAnsatz(problem, "multinet"),
}

print("constraint residuals with random weights (no training):")
rng = np.random.default_rng(0)
for name, ansatz in kinds.items():
    bound = ansatz.bind(rng.normal(0.0, 1.0, ansatz.n_params))
    worst = max(r.max_abs for r in residuals_1d(bound, problem))
    print(f"  {name:>14}: worst |residual| = {worst:.1e}")
# the soft field only learns the conditions through its loss, so it starts far off

colloc = collocation_1d(problem, 40)
print(f"\ntraining {iterations} Adam steps, lr 5e-3, 40 collocation points:")
for name, ansatz in kinds.items():
    report = train(TrainConfig(name, iterations=iterations, eval_every=max(iterations // 4, 1)), ansatz, problem, colloc)
    trail = " -> ".join(f"{m:.1e}" for m in report.metric_history)
    print(f"  {name:>14}: relative L2 {trail}  ({report.wall_seconds:.0f}s)")
