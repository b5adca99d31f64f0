"""Compile target distributions into stochastic chemical reaction networks.

Subpackages: :mod:`crndist.analysis` (certificates, exact laws, oracle,
bounds) and :mod:`crndist.sim` (exact simulation and verification).
"""

from . import analysis, sim
from .dist import (
    FiniteDistribution,
    Mixture,
    PointMass,
    ProductPoisson,
    UniformBox,
    distance_to_spec,
    inf_norm_distance,
    marginalize,
    spec_dumps,
    spec_from_dict,
    spec_loads,
    truncate,
)
from .errors import (
    BoxTooLargeError,
    CapExceededError,
    CRNError,
    NumericalError,
    ReducibleTruncationError,
    ThresholdError,
    ValidationError,
)
from .network import (
    Reaction,
    ReactionNetwork,
    propensity,
    transition_map,
    validate_network,
)
from .synth import (
    SynthesisResult,
    build_spanning_tree,
    check_cluster,
    compile_auto,
    synth_bimolecular,
    synth_full,
    synth_mix,
    synth_mixture_spec,
    synth_multidim_unif,
    synth_point_mass,
    synth_point_mass_mix,
    synth_prod_pois,
    synth_spanning_tree,
)

__version__ = "0.1.0"
