"""
Numerical toolkit for non-accretive electromagnetic Schrodinger operators
``(-i grad + A)^2 + V`` with complex potentials on boxes in one or two dimensions.

Modules: ``expr`` (expressions), ``fields`` (weights), ``assumptions``
(certificates), ``grid``, ``assembly``, ``forms`` (inequality gaps),
``eigensolve``, ``agmon`` (decay), ``enclosure`` (regions and truncation),
``config`` and ``cli``.
"""

from .assembly import assemble_operator, apply_gradient, edge_gradient, SparseComplexOperator
from .assumptions import Certificate, NoCertificate, certify, diagnose_asymptotics
from .agmon import AgmonProfile, DecayReport, agmon_distance, certify_decay, certify_generalized
from .eigensolve import (Eigenpair, ProjectorResult, ResolventProbe, eigenpairs_near, resolvent_probe,
                         riesz_projector, shift_invert_arnoldi)
from .enclosure import (EnclosureRegion, FredholmWindow, classify, estimate_vinf, placement_check,
                        truncation_study)
from .expr import differentiate, evaluate, parse, to_string
from .fields import ElectromagneticField
from .forms import (DiscreteForm, InequalityGap, WeightFunction, coercivity_gap, form_Q, graph_norm_estimate,
                    lemma_gap)
from .grid import Grid, random_compact_support

__version__ = "0.1.0"
