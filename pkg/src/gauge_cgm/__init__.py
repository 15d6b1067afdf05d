"""Penalized and reweighted conditional gradient methods for gauge-regularized
sparse problems, with gap-based screening and a sensing-experiment harness."""
from ._jit import backend
from .atoms import (Atom, AtomSet, CoeffMap, LatentGroup, MappedBasis,
                    ReweightedAtomSet, SignedBasis, TotalVariation,
                    TVInfeasibleGradient, decompose, gauge_value, lmo,
                    make_atom_set, recession_minimize, reweight, support_value)
from .losses import (QuadraticLoss, SmoothnessCertificate, loss_eval, loss_grad,
                     smoothness_constant)
from .screening import (ScreenSet, delta_slacks, epsilon_schedule, f1_score,
                        linearization_error, screen)
from .solver import (DivergenceError, IterationRecord, RunResult, SolverConfig,
                     SolverState, merge_step, min_maj_step, residual,
                     reweight_state, run)
from .transforms import (ConvergenceWarning, GammaPenalty, PhiPenalty,
                         gamma_deriv, gamma_eval, phi_conj, phi_conj_deriv,
                         phi_eval)

__version__ = "0.1.0"

__all__ = [
    "Atom", "AtomSet", "CoeffMap", "ConvergenceWarning", "DivergenceError",
    "GammaPenalty", "IterationRecord", "LatentGroup", "MappedBasis",
    "PhiPenalty", "QuadraticLoss", "ReweightedAtomSet", "RunResult",
    "ScreenSet", "SignedBasis", "SmoothnessCertificate", "SolverConfig",
    "SolverState", "TVInfeasibleGradient", "TotalVariation", "backend",
    "decompose", "delta_slacks", "epsilon_schedule", "f1_score",
    "gamma_deriv", "gamma_eval", "gauge_value", "linearization_error", "lmo",
    "loss_eval", "loss_grad", "make_atom_set", "merge_step", "min_maj_step",
    "phi_conj", "phi_conj_deriv", "phi_eval", "recession_minimize", "residual",
    "reweight", "reweight_state", "run", "screen", "smoothness_constant",
    "support_value",
]
