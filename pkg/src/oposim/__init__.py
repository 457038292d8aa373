"""oposim: multi-mode optical parametric oscillator simulation and analysis.

Subpackages by topic: ``cavity`` (resonator optics and rate conversion),
``models`` (positive-P Langevin systems), ``sde`` (stochastic integration and
spectral estimation), ``steady`` (classical branches and bifurcations),
``spectra`` (linearized output noise spectra), ``entangle`` (squeezing and
entanglement metrics), ``fock`` (truncated master-equation oracle),
``lattice`` (superradiant lattice dynamics) and ``cli``.
"""

__version__ = "0.1.0"
