"""Condensation-regime random planar maps.

Simply generated trees with heavy-tailed weights, their labelled mobiles
and the bipartite maps they encode, with exact samplers, exhaustive
small-size oracles and the Monte Carlo experiments that probe the
condensation scaling limits.
"""

__version__ = "0.1.0"

from .bijections import LabelRuleError, Mobile, bdg_forward, bdg_inverse, gn_forward, gn_inverse
from .estimators import BoltzmannMapSampler, LabelProcessTransformer, SimplyGeneratedTreeSampler
from .gw import GWSpec, NotAdmissibleError, solve_Z, tilt
from .labels import ProcessTrace, label_process, sample_labels, sample_mobile
from .planarmap import PlanarMap, validate
from .rng import RNG_ALGORITHM, replicate_rng
from .trees import PlanarTree, SamplerCapError, condensate_view, sample_tree
from .weights import Regime, RegimeReport, WeightSequence, analyze

__all__ = [
    "__version__",
    "LabelRuleError", "Mobile", "bdg_forward", "bdg_inverse", "gn_forward", "gn_inverse",
    "BoltzmannMapSampler", "LabelProcessTransformer", "SimplyGeneratedTreeSampler",
    "GWSpec", "NotAdmissibleError", "solve_Z", "tilt",
    "ProcessTrace", "label_process", "sample_labels", "sample_mobile",
    "PlanarMap", "validate",
    "RNG_ALGORITHM", "replicate_rng",
    "PlanarTree", "SamplerCapError", "condensate_view", "sample_tree",
    "Regime", "RegimeReport", "WeightSequence", "analyze",
]
