"""Driven-dissipative quantum battery simulations with measurement and coherent feedback."""
from .energetics import EnergyReport, collective_energy, ergotropy, stored_energy
from .errors import IntegrationError, PositivityError, QBSimError, SingularError, SizeError, ValidationError
from .lindblad import Generator, RateMatrix, apply_generator, build_superoperator, evolve, spectrum, steady_state
from .meanfield import MeanFieldState, classify_phase, mf_evolve
from .waveguide import ModelSpec, build_collective, build_full_setup1, build_full_setup2, build_single_atom, collective_spec

__version__ = "0.1.0"
