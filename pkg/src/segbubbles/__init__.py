"""Numerical toolkit for multi-bubble ansatz solutions concentrating on linked circles in R^4.

Modules: geometry (peak lattices, symmetry maps, linking numbers), bubbles
(profiles and the ansatz), potential, quadrature (peaked integration and
weighted sup norms), residual, expansions (Pohozaev-type integrals),
reduced (leading-order reduced system), verify (lemma checks) and cli.
"""

__version__ = "0.1.0"
