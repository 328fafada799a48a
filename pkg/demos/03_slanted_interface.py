"""The 2D slanted-interface problem: reference solve and buffer enforcement.

A 2x1 plate with kappa = 0.1 left of a slanted interface and 1 to its right,
three Gaussian sources, Neumann walls on the left part and Dirichlet walls on
the right part.  No closed form exists, so a finite-volume solve provides the
reference.  The buffer ansatz enforces every condition exactly at Gauss-Legendre
samples along each edge and only approximately between them.

Run:  python demos/03_slanted_interface.py
"""

import numpy as np

from hardpinn.autodiff import value_of
from hardpinn.buffer import BufferAnsatz2D
from hardpinn.diagnostics import residuals_2d
from hardpinn.fdref import reference_p4
from hardpinn.problems import problem4, relative_l2

problem = problem4()
gx, gy = problem.test_grid()

# reference: second-order finite volumes with harmonic face averaging
fine = reference_p4(problem, nx=512)(gx, gy)
for nx in (64, 128, 256):
    err = relative_l2(reference_p4(problem, nx=nx)(gx, gy), fine)
    print(f"finite-volume nx={nx:>3}: relative L2 vs nx=512 = {err:.2e}")
print(f"reference peak {fine.max():.3f} at {gx[fine.argmax()]:.2f}, {gy[fine.argmax()]:.2f}")

# buffer ansatz with untrained nets
ansatz = BufferAnsatz2D(problem)
bound = ansatz.bind(ansatz.init_params())
print(f"\nRBF systems: {[b.n_dofs for b in ansatz.bases]} DOFs, condition numbers "
      f"{[f'{b.cond:.1e}' for b in ansatz.bases]}")
print(f"{'condition':>10} {'edge':>13} {'where':>8}  max |residual|")
for row in residuals_2d(bound, problem):
    print(f"{row.condition:>10} {row.location:>13} {row.where:>8}  {row.max_abs:.1e}")

pts = np.column_stack([gx, gy])
sub = problem.subdomain(gx, gy)
for m in range(2):
    idx = sub == m
    dirs = np.tile([1.0, 0.0], (idx.sum(), 1))
    g = np.asarray(value_of(bound.buffer_jet(m, pts[idx], dirs).value))
    u = np.asarray(value_of(bound.subdomain_jet(m, pts[idx], dirs).value))
    print(f"subdomain {m}: max |buffer| {np.abs(g).max():.2e}, max |net + buffer| {np.abs(u).max():.2e}")
# Training drives the nets toward the conditions themselves, which shrinks the
# buffer; see `hardpinn run p4_buffer` for the full run.
