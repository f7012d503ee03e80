"""Deterministic, seedable simulator of a transportable optical lattice clock:
atom preparation, lattice spectroscopy, a closed-loop clock servo, oscillator
noise synthesis, frequency-stability analysis, and a systematic shift budget.
"""

__version__ = "0.1.0"
