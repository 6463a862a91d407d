"""Indoor furniture layout synthesis from spatial-strength priors."""

__version__ = "0.1.0"
