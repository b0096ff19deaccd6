"""Flux-qubit readout through non-perturbative dispersive coupling.

Modules
-------
resonator
    SQUID-terminated resonator: frequency, flux sensitivity, Kerr term.
fluxqubit
    Three-junction flux qubit in the charge basis.
readout
    Semiclassical cavity response, SNR and fidelity.
quantum_verify
    Master-equation cross-checks and measurement noise.
protocol
    Time to fidelity, drive bounds and optimal homodyne angle.
cli
    Configuration-driven experiment runner.
"""

__version__ = "0.1.0"
