"""evokernel: elliptic solution operators on boundary-integral kernels.

Learned operator models (a quadrature-structured product network for the
source-driven part and a boundary-density network trained on the second-kind
integral equation residual) plus classical Nystrom and finite-difference
oracles, composed into implicit time steppers for heat, wave and nonlinear
Schrodinger problems.
"""

__version__ = "0.1.0"
