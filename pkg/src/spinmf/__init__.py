"""Forward Ising inference toolkit.

Given a coupling matrix and field vector, this package computes a
criticality-ordered spin sequence, trains a recurrent autoregressive mean
field by minimizing the variational free energy with a baseline-corrected
score-function gradient estimator, and evaluates the result against the
factorized mean field, exact enumeration, Gibbs sampling references, and
analytic error bounds.
"""

from .bounds import BoundReport, bound_report, main_bound, naive_bound
from .datasets import (
    CATALOG,
    dense_n20,
    generate,
    ising_n10,
    npp_to_ising,
    random_n20,
    sparse_n20,
    spin_chain_100,
)
from .errors import ContractViolation, NumericalAbort, SizeGuardRefusal
from .exact import (
    all_states,
    exact_distribution,
    exact_free_energy,
    exact_log_partition,
    exact_magnetization,
)
from .gibbs import gibbs_sample
from .model import (
    IsingModel,
    SampleSet,
    absorb_external_field,
    energies,
    energy,
    load_model,
    load_samples,
    magnetization,
    save_model,
    save_samples,
)
from .nmf import NmfSolution, nmf_free_energy, nmf_grad, nmf_minimize
from .norms import frobenius_norm, inf_to_one_norm
from .ordering import (
    SpinOrder,
    criticality_order,
    inverse_order,
    load_order,
    random_order,
    save_order,
)
from .rnn import (
    RnnMeanField,
    conditionals,
    load_checkpoint,
    log_prob,
    log_prob_batch,
    log_prob_grad,
    params_from_marginals,
    sample,
    save_checkpoint,
    weighted_log_prob_grad,
)
from .training import (
    AnnealSchedule,
    GradientEstimate,
    TrainConfig,
    TrainReport,
    estimate_gradient,
    exact_variational_free_energy,
    train,
    variational_free_energy_estimate,
)

__version__ = "0.1.0"
