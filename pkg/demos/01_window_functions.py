"""Window polynomials: what the families look like and why they compose.

Run:  python demos/01_window_functions.py
"""

import numpy as np

from hardpinn.autodiff import Jet2
from hardpinn.windows import (DIRICHLET, INTERIOR, NEUMANN, WindowSpec, constraint_table, eval_window,
                              window_coefficients)

# Each family is the lowest-degree polynomial meeting a small table of value /
# derivative constraints at tau = 0 (window center) and tau = 1 (edge).
for kind in (INTERIOR, DIRICHLET, NEUMANN):
    for k in (1, 2, 3):
        coeffs = ", ".join(str(c) for c in window_coefficients(kind, k))
        print(f"{kind:>9} k={k}: [{coeffs}]")

print("\nconstraint rows for the k=2 interior window (side, order, value):")
for row in constraint_table(INTERIOR, 2):
    print("   ", row)

# Two interior windows on neighbouring nodes overlap on [0, 0.5] and sum to one,
# so a field written as a window-weighted sum of nets can represent constants.
x = np.linspace(0.0, 0.5, 6)
left = eval_window(WindowSpec(INTERIOR, 1, center=0.0, half_width=0.5), Jet2.variable(x))
right = eval_window(WindowSpec(INTERIOR, 1, center=0.5, half_width=0.5), Jet2.variable(x))
print("\npartition of unity on [0, 0.5]:", np.round(left.value + right.value, 15))

# A Neumann window vanishes at its center and has unit slope there (taken from
# the domain side), which is what lets a free function carry the prescribed flux.
spec = WindowSpec(NEUMANN, 1, center=0.0, half_width=0.5, normal_sign=-1)
w = eval_window(spec, Jet2.variable(np.array([0.0])), side=+1)
print("Neumann window at its center: value", w.value[0], "slope", w.d1[0])
