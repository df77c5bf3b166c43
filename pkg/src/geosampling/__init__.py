"""Geometric sampling: designs from bars of an exactly discretized unit interval."""

from .design import (Design, StripTable, design_of, draw_sample, entropy, first_order,
                     second_order, strips)
from .estimator import criterion, design_variance, nht_total
from .grid import DEFAULT_GRID, IntervalSet, to_cells
from .layout import BarLayout, Population, fip_from_aux, madow_layout, random_layout
from .chaotic import MoveParams, fixed_move, free_move, run_chaotic
from .oracle import maxent_design, poisson_design, total_variation

__version__ = "0.1.0"

__all__ = [
    "BarLayout", "DEFAULT_GRID", "Design", "IntervalSet", "MoveParams", "Population",
    "StripTable", "criterion", "design_of", "design_variance", "draw_sample", "entropy",
    "fip_from_aux", "first_order", "fixed_move", "free_move", "madow_layout", "maxent_design",
    "nht_total", "poisson_design", "random_layout", "run_chaotic", "second_order", "strips",
    "to_cells", "total_variation",
]
