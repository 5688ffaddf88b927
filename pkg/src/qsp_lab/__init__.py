"""Noise-aware quantum signal processing toolkit for Hamiltonian simulation.

Desk-scale (dense, exactly verifiable) implementation of the full
pipeline: spectrum rescaling, block encoding (LCU with multiplexor
compression, or a variational reflection ansatz), phase-factor design,
noise-aware degree selection, noisy emulation with post-selection,
depolarizing error mitigation, Pauli tomography, and entanglement
entropies.
"""

__version__ = "0.1.0"
