"""
Spectrum sharing between a licensed provider and an entrant: bargaining
solver, non-cooperative fallback and the verification oracles.
"""
