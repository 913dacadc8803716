"""hjhomog: numerical lab for periodic homogenization of 1D multiscale convex Hamilton-Jacobi equations."""

__version__ = "0.1.0"
