"""Bessel pairs and Hardy-type identities on constant-curvature model spaces, checked by quadrature."""

__version__ = "0.1.0"
