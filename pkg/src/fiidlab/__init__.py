"""Finite-radius local rules on regular trees: label marginals, entropy
audits, homomorphism rule search, and emulation on finite graphs."""

__version__ = "0.1.0"

from . import cli, entropy, graphs, homsearch, rules, simulate  # noqa: F401
