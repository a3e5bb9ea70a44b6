"""Simulation and verification of the Lohe aggregation hierarchy.

Modules:

* :mod:`lohe.tensor` -- dense complex tensors, Frobenius geometry, contraction.
* :mod:`lohe.freeflow` -- linear free flows and their exponentials.
* :mod:`lohe.models` -- ensembles, the master right-hand side, Kuramoto.
* :mod:`lohe.integrate` -- RK4 integration and the split-flow integrator.
* :mod:`lohe.diagnostics` -- order parameter, fluxes, classifier.
* :mod:`lohe.spectral` -- Fourier bases and the coefficient/grid bridge.
* :mod:`lohe.cli` -- command-line front end.
"""

from .errors import NumericError, UsageError

__version__ = "0.1.0"

__all__ = ["NumericError", "UsageError", "__version__"]
