"""Local Hardy spaces of differential forms on finite metric measure spaces.

Submodules
----------
space, covering
    Metric measure spaces, growth constants and covers.
tent, atoms
    Tent-space operators and atomic decompositions.
complex, holo, offdiag
    Weighted Hodge-Dirac operators, holomorphic functional calculus and
    off-diagonal measurements.
hardy
    Local Hardy norms, molecules and Riesz transforms.
verify, cli
    Acceptance checks and the ``lochardy`` command.
"""

from __future__ import annotations

__version__ = "0.1.0"
