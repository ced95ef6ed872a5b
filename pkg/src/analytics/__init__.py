"""Plotly report figures for run directories"""

from .visualizations import HyperbolicityVisualizations, manifold_probe_values

__all__ = ['HyperbolicityVisualizations', 'manifold_probe_values']
