"""Thermodynamic-formalism computations for Fuchsian groups.

Submodules:
  geometry   -- upper half-plane model, isometries, Busemann cocycle, shadows
  groups     -- reduced words, orbit balls, ping-pong certificates
  potentials -- potentials on the plane, line integrals, Gibbs cocycles
  orbitsum   -- Poincare series, critical exponents, Patterson atoms
  coding     -- subshift model, transfer-operator pressure, Gibbs measures
  cli        -- config-driven experiment runner
"""

__version__ = "0.1.0"
