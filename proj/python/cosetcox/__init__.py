"""Invariant point processes, Cox processes and factor graphs on model groups."""

from ._cosetcox import (
    Box,
    Estimate,
    ModelGroup,
    RandomStream,
    SubgroupSpec,
    cost_experiment,
    intensity,
    palm_poisson,
    sample_cox,
    sample_poisson,
    star_schedule,
    voronoi_volumes,
    weak_convergence,
)

__all__ = [
    "Box",
    "Estimate",
    "ModelGroup",
    "RandomStream",
    "SubgroupSpec",
    "cost_experiment",
    "intensity",
    "palm_poisson",
    "sample_cox",
    "sample_poisson",
    "star_schedule",
    "voronoi_volumes",
    "weak_convergence",
]
