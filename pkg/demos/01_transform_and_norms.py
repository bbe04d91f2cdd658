"""Wave packet transform of a Dirac spinor: inversion, L2 constant, mixed norms.

Run with ``python3 demos/01_transform_and_norms.py``.
"""

import numpy as np

from dirac_modspace.grid import Grid, gaussian_packet
from dirac_modspace.modspace import NormSpec, mod_norms
from dirac_modspace.wavepacket import gaussian_window, wp_invert, wp_transform

grid = Grid(1, 128, 16.0)
phi = gaussian_window(grid, 1.0)
psi = gaussian_packet(grid, [1.0, 0.5j], center=-2.0, width=1.2, momentum=1.5)

# %% transform and invert
W = wp_transform(phi, psi)
back = wp_invert(phi, phi, W)
print(f"inversion error      {(back - psi).norm() / psi.norm():.2e}")

# %% the L2 norm on phase space is (2 pi)^{N/2} |phi| |psi| on the grid
l2 = np.sqrt(np.sum(np.abs(W.data) ** 2) * grid.dx * grid.dxi)
print(f"L2 ratio             {l2 / ((2 * np.pi) ** 0.5 * phi.norm * psi.norm()):.15f}")

# %% a few modulation-space norms of the same packet
specs = [NormSpec(p, q) for p, q in [(1, 1), (2, 2), (4, 2), (np.inf, 1), (1, np.inf)]]
for s, v in zip(specs, mod_norms(psi, phi, specs)):
    print(f"M^{s.label():<12} {v:.6f}")
