"""Built-in test systems, system descriptors and the chart adapter"""

from .builtins import BUILTINS, CAT_MATRIX, builtin, cat_orbit, pliss_rate
from .charts import ChartedOrbit, chart_adapter, estimate_L, wrap
from .descriptor import (SAMPLE_DESCRIPTORS, BasesSpec, ConeSpec, PolynomialMap, PolynomialTerm,
                         SystemDescriptor)

__all__ = [
    'BUILTINS', 'CAT_MATRIX', 'builtin', 'cat_orbit', 'pliss_rate',
    'ChartedOrbit', 'chart_adapter', 'estimate_L', 'wrap',
    'SAMPLE_DESCRIPTORS', 'BasesSpec', 'ConeSpec', 'PolynomialMap', 'PolynomialTerm',
    'SystemDescriptor',
]
