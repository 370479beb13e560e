"""Point configurations on spheres: Riesz energy, separation, covering radius."""

__version__ = "0.1.0"
