"""Exact inference for a small discrete probabilistic programming language.

Programs denote kernels: maps from an initial state to exact rational
weights on final states. Loops are handled by Kleene iteration and by
certifying user-supplied fixed points.
"""

from .config import Config
from .constructs import (Assign, CChoice, Observe, PChoice, Seq, Skip, Uniform, While, elaborate,
                         sem_assign, sem_cchoice, sem_parallel, sem_pchoice, sem_seq, sem_skip,
                         sem_uniform)
from .expr import compile_expr, eval_expr, iverson_rewrite, subst_final, subst_initial, subst_var_final
from .fixpoint import (LoopSpec, iterate, iterdiff, kleene_gfp, kleene_lfp, loop_step,
                       termination_probability, verify_unique_fp)
from .kernel import (Kernel, classify, clamp_kernel, kernels_equal, normalize_alpha, normalize_final,
                     normalize_global, tabulate)
from .query import distribution_table, expect, prob_of
from .state import Domain, StateSpace, enumerate_states, make_space, update

__version__ = "0.1.0"
