"""Numerical laboratory for a robustly transitive, non-mixing skew product
on the 3-torus with two intermingled physical measures.

The core objects:

- :class:`kan3.kanmap.KanMap` — the skew-product family over a hyperbolic
  toral automorphism, with exact invariant boundary tori;
- :mod:`kan3.blender` — the affine blender-horseshoe model realized by the
  return map over the homoclinic strip, with its certificates;
- :mod:`kan3.ergodic` — Lyapunov exponents, u-disk push-forwards, basin
  classification, manifold coverage, mixing diagnostics;
- :mod:`kan3.cli` — the ``kan3`` command line driver.
"""

from .config import ExperimentConfig, parse_config
from .kanmap import KanMap, KanParams, break_torus, verify_kan_conditions

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "KanMap",
    "KanParams",
    "break_torus",
    "parse_config",
    "verify_kan_conditions",
    "__version__",
]
