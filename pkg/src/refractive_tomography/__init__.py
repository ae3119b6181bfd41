"""Refractive tomography toolkit.

Multi-slice beam-propagation optical diffraction tomography: forward model,
adjoint-gradient reconstruction with TV regularization, synthetic-data
simulation, illumination-angle self-calibration and volume stitching.
"""

__version__ = "0.1.0"
