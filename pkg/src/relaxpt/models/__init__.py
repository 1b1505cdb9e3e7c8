"""Model Hamiltonians: anharmonic and Herbst-Simon oscillators, hydrogen in a field, Heisenberg chains."""

from .heisenberg import build_heisenberg, ipr, lowest_diagonal_target, random_fields
from .oscillators import (build_anharmonic, build_herbst_simon, herbst_simon_coefficients,
                          polynomial_potential, position_matrix)
from .spec import MODELS, ModelSpec, parse_number, with_param
from .zeeman import build_zeeman_pencil, zeeman_energy, zeeman_self_test
