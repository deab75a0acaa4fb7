"""Multiscale network analysis of Himalayan expedition records."""

__version__ = "0.1.0"

FEATURES = (
    "age_below_median",
    "male",
    "o2_ascent",
    "o2_descent",
    "hired_sherpa",
    "experience_above_8000m",
)
