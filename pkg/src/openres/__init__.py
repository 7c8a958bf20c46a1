"""openres: effective non-Hermitian Hamiltonians, scattering matrices and
bound states in the continuum (BICs) for open wave resonators.

Subpackages by physical model:

- specfun   : Bessel/Legendre/spherical-harmonic/Wigner-d kernel
- hcore     : model-agnostic H_eff assembly, S-matrix, resonance tracking,
              BIC detection
- toymodels : two-level avoided-crossing model, five-site Fabry-Perot chain
- wires1d   : exact 1D solvers (square well, flux-threaded ring, spin layer)
- planar2d  : rectangular planar resonator with plane waveguides (+ soft
              Sinai bump extension)
- cyl3d     : cylindrical resonator with rotated off-axis circular ducts
- sph3d     : spherical cavity with Wigner-rotated duct attachments
- sweep     : parameter-sweep engine, BIC catalogs, file formats
- cli       : command-line front end
"""

__version__ = "0.1.0"
