"""Metasurface-mediated two-photon spin entanglement: dynamics, correlations, decoherence and g(r) profiles."""

__version__ = "0.1.0"

from .qcore import (BELL_STATE, MM, MP, PM, PP, EigenSystem, SystemParams, bell_fidelity, bell_time,
                    build_hamiltonian, eigensystem, evolve_analytic, evolve_numeric,
                    measurement_probabilities, resonant_state)
from .metrics import (MeasurementBasis, concurrence_mixed, concurrence_pure,
                      conditional_entropy_after_measurement, mutual_information, ppt_min_eigenvalue,
                      quantum_discord, von_neumann_entropy)
from .decoherence import (PlatformModel, discord_decay_series, discord_vanishing_time,
                          platform_from_preset, purity_decay, werner_state)
