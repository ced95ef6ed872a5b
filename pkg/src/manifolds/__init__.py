"""Admissible manifolds, the graph transform and local unstable manifolds"""

from .admissible import (AdmissibleManifold, ClassParams, ClassReport, ManifoldDump, c0_distance,
                         probe_grid)
from .graph_transform import (AttractionReport, ContractionReport, ExpansionReport,
                              TransformStepReport, check_attraction, check_contraction,
                              check_expansion, class_params_at, graph_invariance_error, push,
                              steps_frame, transform, transform_split)
from .unstable import (BackwardContractionReport, CharacterizationReport, UnstableSolveReport,
                       backward_orbit, check_backward_contraction, check_characterization,
                       unstable_solve)

__all__ = [
    'AdmissibleManifold', 'ClassParams', 'ClassReport', 'ManifoldDump', 'c0_distance',
    'probe_grid',
    'AttractionReport', 'ContractionReport', 'ExpansionReport', 'TransformStepReport',
    'check_attraction', 'check_contraction', 'check_expansion', 'class_params_at',
    'graph_invariance_error', 'push', 'steps_frame', 'transform', 'transform_split',
    'BackwardContractionReport', 'CharacterizationReport', 'UnstableSolveReport',
    'backward_orbit', 'check_backward_contraction', 'check_characterization', 'unstable_solve',
]
