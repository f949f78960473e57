"""One-dimensional quantum cellular automata over finite, unbounded
configurations: simulation, axiom verification, and constructive
two-layered block decomposition."""

__version__ = "0.1.0"
