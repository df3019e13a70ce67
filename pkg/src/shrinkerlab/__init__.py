"""shrinkerlab: a numerical laboratory for self-shrinkers of degree-one
curvature flows.

Curvature kernels and their matrix derivatives, closed-form cone geometry
with the uniqueness-hypothesis checker, profile shooting for the shrinker
ODE, rescaled graph-flow simulation, deviation machinery, and Carleman
weight certification -- wired into reproducible experiments behind a FastAPI
service and a thin CLI client.
"""

__version__ = "0.1.0"
