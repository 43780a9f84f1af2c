"""hjkit: Hamilton-Jacobi theory as a numerical toolkit.

Subpackages by topic:

- varcore: variational systems, Legendre transform, extremal integration
- hjfield: hypersurface families, equidistance, fields, Hilbert integral
- hjchar: first-order PDE solution by characteristic strips
- charfn: Hamilton's two-point characteristic function
- optics: refractive media, Fermat rays, wave-fronts, Huygens envelopes
- wavemech: wave-front speeds, Schrodinger grid propagation, pilot waves
- cli: declarative scenario runner (``hjkit run|list|check``)
"""

__version__ = "0.1.0"
