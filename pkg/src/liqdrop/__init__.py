"""liqdrop: sharp interface droplets and point charges on uniform backgrounds.

Desk-scale numerics for the liquid drop model with a neutralizing background
and for the classical one-component plasma: periodic lattice sums, droplet
energies, trial-state upper bounds for the dilute energy expansion, and the
localization/boundary-layer constructions that back the lower bounds.
"""

__version__ = "0.1.0"

from liqdrop import (  # noqa: F401
    appendixlab,
    coulomb,
    droplet,
    expansion,
    geom,
    jellium,
    serialize,
)
