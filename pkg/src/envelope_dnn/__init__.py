"""Dynamic lower envelopes of planes and cones for planar nearest-neighbour search."""

__version__ = "0.1.0"
