"""Subelliptic heat kernels on quaternionic anti-de Sitter spaces and their quotients.

The quaternionic AdS space of dimension 4n+3 fibres over the quaternionic
hyperbolic space HH^n with SU(2) fibres.  Its horizontal heat kernel p_t(r, eta)
depends on a base distance r and a fiber angle eta.  The package evaluates it
through two independent representations (``ads_kernel`` with method
'spectral' or 'theta'), together with the related complex AdS kernel, the
twistor-space kernel, and the small-time asymptotics of all of them.
"""
from .ads import EvalContext, KernelPoint, KernelValue, ads_kernel, ads_kernel_origin_fiber, ads_mass
from .complex_ads import cads_kernel, relation_residual
from .fibers import cp1_kernel, su2_kernel_spectral, su2_kernel_theta
from .hyperbolic import q_eval, q_eval_complex
from .logspace import MantissaExponent
from .twistor import TwistorPoint, twistor_kernel, twistor_mass

__all__ = [
    "EvalContext",
    "KernelPoint",
    "KernelValue",
    "MantissaExponent",
    "TwistorPoint",
    "ads_kernel",
    "ads_kernel_origin_fiber",
    "ads_mass",
    "cads_kernel",
    "cp1_kernel",
    "q_eval",
    "q_eval_complex",
    "relation_residual",
    "su2_kernel_spectral",
    "su2_kernel_theta",
    "twistor_kernel",
    "twistor_mass",
]

__version__ = "0.1.0"
