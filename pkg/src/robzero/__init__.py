"""Certified robustness of zeros of sampled vector fields."""

from .domain import CUBE, TORUS, Z, Z2, Cochain, GridDomain, SimplicialComplex, SpherePolytope
from .fields import (
    ObjectiveField,
    SampledField,
    gen_gaussian,
    gen_hopf,
    gen_quadratic,
    gen_random_quadratic,
    load_field,
    save_field,
)
from .filtration import CUBICAL, SIMPLEXWISE, TooCoarse, build_filtration
from .obstruction import Options, RobustnessReport, obstruction_persistence, robustness_report
from .robopt import OptCurve, opt_curve

__version__ = "0.1.0"

__all__ = [
    "CUBE",
    "CUBICAL",
    "Cochain",
    "GridDomain",
    "ObjectiveField",
    "OptCurve",
    "Options",
    "RobustnessReport",
    "SIMPLEXWISE",
    "SampledField",
    "SimplicialComplex",
    "SpherePolytope",
    "TORUS",
    "TooCoarse",
    "Z",
    "Z2",
    "build_filtration",
    "gen_gaussian",
    "gen_hopf",
    "gen_quadratic",
    "gen_random_quadratic",
    "load_field",
    "obstruction_persistence",
    "opt_curve",
    "robustness_report",
    "save_field",
]
