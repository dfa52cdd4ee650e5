"""Exact simulator and security-analysis toolkit for an interferometric
quantum bit commitment protocol with asymmetric beam splitters."""

from . import codes, counterfactual, kernels, operator_model, optics, protocol, strategies

__version__ = "0.1.0"

__all__ = [
    "codes",
    "counterfactual",
    "kernels",
    "operator_model",
    "optics",
    "protocol",
    "strategies",
    "__version__",
]
