"""Linear SVM training over horizontally partitioned data with gossip averaging."""
from .core import SparseVector, dot, l2_norm, scale_add
from .dataio import Dataset, LabeledInstance, Shard, load_dataset, parse_libsvm_line, partition
from .evaluation import BoundInputs, combined_std, regret_bound, speedup
from .experiment import ExperimentConfig, run_experiment
from .gadget import GadgetConfig, GadgetResult, gadget_iteration, gadget_train
from .gossip import (Topology, build_metropolis_matrix, parse_topology, push_sum_round,
                     push_vector, rounds_for_accuracy)
from .simnet import RoundScheduler
from .svm import (HyperParams, Model, hinge_loss, pegasos_train, primal_objective,
                  project_to_ball, subgradient_step, zero_one_error)

__version__ = "0.1.0"
