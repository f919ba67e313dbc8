"""Lorentzian L^p example spaces: separations, curvature, Noldus metrics, GH and Hausdorff estimates."""

__version__ = "0.1.0"
