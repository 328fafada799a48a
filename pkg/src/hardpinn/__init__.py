"""Hard-constrained PINNs for diffusion interface problems.

Two ansatz families satisfy boundary and interface conditions by
construction: products of neural networks with polynomial windows, and
unconstrained networks corrected by buffer functions whose coefficients
come from a small linear solve.  Penalty-based baselines, a finite-volume
reference solver and a config-driven CLI are included.
"""

from .autodiff import Jet2, Tape, Var, grad_params, jet2_eval, value_and_grad
from .buffer import BufferAnsatz1D, BufferAnsatz2D
from .nn import AdamState, InitScheme, Mlp, adam_step
from .problems import get_problem, problem1, problem2, problem3, problem4, relative_l2
from .soft import SoftAnsatz
from .training import (CollocationSet, TrainConfig, TrainReport, make_collocation, physics_loss,
                       polar_physics_loss, soft_losses, train)
from .window_ansatz import WindowAnsatz1D, WindowAnsatz2D, default_layout_1d, full_hard_layout, interface_only_layout
from .windows import make_window, window_coefficients

__version__ = "0.1.0"

__all__ = [
    "AdamState", "BufferAnsatz1D", "BufferAnsatz2D", "CollocationSet", "InitScheme", "Jet2", "Mlp", "SoftAnsatz",
    "Tape", "TrainConfig", "TrainReport", "Var", "WindowAnsatz1D", "WindowAnsatz2D", "adam_step",
    "default_layout_1d", "full_hard_layout", "get_problem", "grad_params", "interface_only_layout", "jet2_eval",
    "make_collocation", "make_window", "physics_loss", "polar_physics_loss", "problem1", "problem2", "problem3",
    "problem4", "relative_l2", "soft_losses", "train", "value_and_grad", "window_coefficients",
]
