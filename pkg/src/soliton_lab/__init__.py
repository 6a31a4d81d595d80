"""soliton-lab: chart-level verification of almost-soliton conformal duality.

Subpackages:

* :mod:`soliton_lab.autodiff` -- second-order forward-mode jets.
* :mod:`soliton_lab.chart` -- metrics, curvature, conformal-change checks.
* :mod:`soliton_lab.soliton` -- almost-soliton residuals and the duality map.
* :mod:`soliton_lab.skrp` -- the closed-form Kahler soliton profile family
  and the explicit 4-dimensional chart assembly.
* :mod:`soliton_lab.completeness` -- endpoint analysis of the dual metric's
  arc-length integral.
* :mod:`soliton_lab.fixtures` -- named reference metrics, pairs, profiles.
* :mod:`soliton_lab.cli` -- the ``soliton-lab`` command.
"""

__version__ = "0.1.0"

from .chart import MetricChart, ScalarField, SmoothFunction1D  # noqa: F401
from .sampling import Box  # noqa: F401
from .soliton import SolitonPair  # noqa: F401
