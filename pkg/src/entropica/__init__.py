"""Grid-based differential-entropy functionals and checks of entropy and channel inequalities."""

__version__ = "0.1.0"
