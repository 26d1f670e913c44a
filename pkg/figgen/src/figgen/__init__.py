from .render import FigureSpec, FormatError, converged_means, read_rows, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "FormatError", "converged_means", "read_rows", "render"]
