"""Forchheimer gas flow in heterogeneous porous media with certified bounds."""

from ._core import (
    Field,
    Grid,
    Law,
    alpha_bound,
    calibrate,
    exponent_book,
    gas_table,
    solve_ibvp,
    weighted_lp_norm,
    weights,
)

__all__ = [
    "Field",
    "Grid",
    "Law",
    "alpha_bound",
    "calibrate",
    "exponent_book",
    "gas_table",
    "solve_ibvp",
    "weighted_lp_norm",
    "weights",
]
