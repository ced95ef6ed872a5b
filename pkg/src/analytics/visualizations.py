import logging
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from src.manifolds.admissible import AdmissibleManifold, probe_grid

logger = logging.getLogger(__name__)


class HyperbolicityVisualizations:
    """Report figures for a run directory"""

    @staticmethod
    def create_effective_rate_chart(series: pd.DataFrame):
        """lambda^e per index with the effective hyperbolic times marked"""
        fig = go.Figure()

        fig.add_trace(go.Scatter(
            x=series['n'],
            y=series['lambda_e'],
            mode='lines',
            name='lambda^e',
            line=dict(color='steelblue', width=1.5)
        ))

        hits = series[series['in_gamma'] == 1]
        fig.add_trace(go.Scatter(
            x=hits['n'],
            y=hits['lambda_e'],
            mode='markers',
            name='effective hyperbolic times',
            marker=dict(size=6, color='green', symbol='triangle-up')
        ))

        fig.add_hline(y=0, line_dash="dash", line_color="gray", opacity=0.5)

        fig.update_layout(
            title="Effective Rate and Hyperbolic Times",
            xaxis_title="n",
            yaxis_title="lambda^e_n",
            template='plotly_white',
            height=400
        )

        return fig

    @staticmethod
    def create_m_sequence_chart(series: pd.DataFrame):
        fig = go.Figure()

        fig.add_trace(go.Scatter(
            x=series['time'],
            y=series['M_n'],
            mode='lines',
            name='M_n',
            fill='tozeroy',
            line=dict(color='firebrick', width=2)
        ))

        fig.update_layout(
            title="Shortfall from the Target Rate",
            xaxis_title="time",
            yaxis_title="M_n",
            template='plotly_white',
            height=400
        )

        return fig

    @staticmethod
    def create_parameter_chart(params: pd.DataFrame):
        """Radii and class constants on a log scale; zero entries are dropped"""
        fig = go.Figure()

        colors = {'r': 'steelblue', 'tau': 'orange', 'sigma': 'purple', 'kappa': 'gray',
                  'gamma': 'green'}
        for column, color in colors.items():
            values = params[column].where(params[column] > 0)
            if values.notna().any():
                fig.add_trace(go.Scatter(x=params['n'], y=values, mode='lines', name=column,
                                         line=dict(color=color, width=2)))

        fig.update_layout(
            title="Parameter Sequences",
            xaxis_title="n",
            yaxis_type='log',
            template='plotly_white',
            height=450
        )

        return fig

    @staticmethod
    def create_manifold_chart(manifolds: Dict[str, AdmissibleManifold], points: int = 201):
        """Graphs of one-dimensional manifolds with one-dimensional fibres"""
        fig = go.Figure()

        for name, m in manifolds.items():
            if m.u_dim != 1 or m.s_dim != 1:
                logger.debug("Skipping %s: only 1+1 dimensional graphs are drawn", name)
                continue
            v = np.linspace(-m.radius, m.radius, points)
            fig.add_trace(go.Scatter(x=v, y=m.evaluate(v[:, None], check=False)[:, 0],
                                     mode='lines', name=name))

        fig.update_layout(
            title="Admissible Manifolds",
            xaxis_title="v (unstable coordinate)",
            yaxis_title="psi(v)",
            template='plotly_white',
            height=500
        )

        return fig

    @staticmethod
    def create_transform_steps_chart(steps: pd.DataFrame):
        fig = go.Figure()

        fig.add_trace(go.Bar(
            x=steps['n'],
            y=steps['expansion_min'],
            name='minimal expansion',
            marker_color='steelblue'
        ))

        fig.add_trace(go.Scatter(
            x=steps['n'],
            y=steps['invariance_error'],
            mode='lines+markers',
            name='invariance error',
            yaxis='y2',
            line=dict(color='red', width=2)
        ))

        fig.update_layout(
            title="Graph Transform Steps",
            xaxis_title="n",
            yaxis=dict(title='expansion'),
            yaxis2=dict(title='invariance error', overlaying='y', side='right', type='log'),
            template='plotly_white',
            height=400
        )

        return fig

    @staticmethod
    def write_report(figures: List[go.Figure], path) -> Path:
        """Standalone HTML with deterministic div ids"""
        path = Path(path)
        parts = [fig.to_html(full_html=False, include_plotlyjs='cdn' if i == 0 else False,
                             div_id=f"figure-{i}")
                 for i, fig in enumerate(figures)]
        path.write_text("<html><head><meta charset=\"utf-8\"></head><body>\n"
                        + "\n".join(parts) + "\n</body></html>\n")
        logger.info("Wrote report with %d figures to %s", len(figures), path)
        return path


def manifold_probe_values(m: AdmissibleManifold) -> pd.DataFrame:
    """psi on the probe grid, one row per point"""
    grid = probe_grid(m.u_dim, m.radius, m.degree)
    values = m.evaluate(grid, check=False).reshape(len(grid), -1)
    frame = pd.DataFrame(grid, columns=[f"v{j}" for j in range(m.u_dim)])
    for j in range(values.shape[1]):
        frame[f"w{j}"] = values[:, j]
    return frame
