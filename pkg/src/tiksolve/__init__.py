"""Solvers for least-squares data fitting with sparsity and TV penalties.

The package provides:

* a Newton-type solver with a forward-backward line search (``newton``),
* proximal-gradient and FISTA baselines (``newton.solve_pgm``, ``fista``),
* an augmented Lagrangian driver for anisotropic TV (``tv``),
* exact weighted |.|^p proximal maps for p in [0, 1] (``penalties``),
* a desk-scale tomography bench: ray-traced projector, phantoms,
  orthonormal Haar transforms (``tomo``, ``wavelets``),
* a CLI (``tiksolve``) for running configured experiments.
"""

from tiksolve._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
