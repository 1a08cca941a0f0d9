"""nanoheat: electromagnetic heating of small 2D particles, desk scale.

The package is organized as a chain of small modules:

- ``specfun``      self-contained special functions (Bessel, E1, erfc)
- ``material``     Lorentz permittivity and resonance frequency selection
- ``geometry``     particle meshes (disc / ellipse) and scaling maps
- ``spectral``     Nystrom discretizations and spectra of the volume operators
- ``scatter``      Lippmann-Schwinger solvers (TM gradient form, TE scalar form)
- ``heatkernels``  heat kernel, layer/volume potentials, identity checks
- ``heatref``      implicit finite-difference transmission reference solver
- ``asymptotics``  dominant-term heat formulas and scaling fits
- ``pipeline``     experiment configs and the sweep orchestrator
- ``acceptance``   the runnable acceptance suite
- ``cli``          command line entry point
"""

__version__ = "0.1.0"
