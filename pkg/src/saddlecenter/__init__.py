"""Numerical toolkit for energy levels just above a saddle-center.

Modules: ``models`` (Hamiltonians and charts), ``flow`` (integration and
events), ``frame_index`` (transverse frames, rotation and Conley-Zehnder
indices), ``orbits`` (Lyapunov, brake and homoclinic orbits, actions,
linking), ``geometry`` (Hill regions, spheres, convexity), ``liouville``
(Liouville fields transverse to the level), ``pseudoplanes`` (the rigid
finite-energy planes of the normal form) and ``cli``.
"""
__all__ = ["models", "flow", "frame_index", "orbits", "geometry", "liouville",
           "pseudoplanes", "cli"]
