"""Independent checks behind the derived reference values.

Each case recomputes a quantity by a route that does not share code with
the production path (direct sums, closed forms, refinement) and returns a
record with the measured values and a verdict.  ``run_oracle`` writes the
record together with provenance (package, numpy and python versions).
"""

from __future__ import annotations

import json
import platform
import time
from pathlib import Path

import numpy as np

from ..dirac import dirac_symbol, free_dirac_propagate, preset, projections
from ..grid import Grid, gaussian_packet, random_band_limited
from ..phaseflow import SymbolRemainder, build_s_kernel, decomposition_residual
from ..potentials import harmonic
from ..refprop import richardson_order
from ..spectral import MultiplierSymbol
from ..wavepacket import gaussian_window, wp_transform
from .config import load_config
from .experiments import make_rng, run_experiment

__all__ = ["ORACLES", "run_oracle"]


def _direct_transform():
    # W_phi f by the defining double sum, node by node
    g = Grid(1, 32, 10.0)
    rng = make_rng(11)
    f = random_band_limited(g, 2, rng, cutoff=3.0)
    phi = gaussian_window(g, 1.0)
    x, xi, h = g.x, g.xi, g.dx
    ref = np.zeros((2, g.n, g.n), dtype=complex)
    for a in range(g.n):
        for b in range(g.n):
            for k in range(g.n):
                d = (x[a] - x[k] + g.L) % (2 * g.L) - g.L
                w = np.conj(phi.samples[int(round(d / h)) + g.n // 2]) * np.exp(-1j * x[k] * xi[b]) * h
                ref[:, a, b] += w * f.data[:, k]
    err = np.abs(wp_transform(phi, f).data - ref).max() / np.abs(ref).max()
    return {"max_rel_error": float(err)}, err < 1e-12


def _projector_algebra():
    rng = make_rng(5)
    worst = 0.0
    for name in ("dirac1d", "dirac2d", "dirac3d"):
        cs = preset(name, 1.0)
        worst = max(worst, cs.clifford_residual())
        xi = rng.normal(scale=3.0, size=(cs.N, 100))
        Pp, Pm = projections(cs, xi)
        I = np.eye(cs.m)[..., None]
        mm = lambda A, B: np.einsum("ij...,jk...->ik...", A, B)
        worst = max(worst,
                    np.abs(mm(Pp, Pp) - Pp).max(), np.abs(mm(Pm, Pm) - Pm).max(),
                    np.abs(mm(Pp, Pm)).max(), np.abs(Pp + Pm - I).max(),
                    np.abs(np.einsum("ii...->...", Pp) - cs.m / 2).max())
    return {"max_error": float(worst)}, worst < 1e-12


def _decomposition():
    g = Grid(1, 64, 10.0)
    phi = gaussian_window(g, 1.0)
    u = random_band_limited(g, 2, make_rng(1), cutoff=1.5)
    r = decomposition_residual(preset("dirac1d"), phi, u)
    return {"relative_residual": r}, r < 1e-9


def _kernel_closed_form():
    # the Dirac kernel is -i alpha d/dx conj(phi); compare with the analytic derivative
    g = Grid(1, 64, 10.0)
    cs = preset("dirac1d")
    phi = gaussian_window(g, 1.0)
    S = build_s_kernel(cs, phi, 1)
    x = g.x
    dphi = -x * phi.samples
    ref = -1j * cs.alphas[0][:, :, None] * np.conj(dphi)
    err = float(np.abs(S.samples - ref).max())
    quad_flag = SymbolRemainder(MultiplierSymbol(lambda xi: np.sum(xi**2, axis=0))).satisfies_bound(1, 1)[0]
    return {"max_abs_error": err, "quadratic_symbol_flagged": not quad_flag}, err < 1e-12 and not quad_flag


def _experiment(name):
    def case():
        rep = run_experiment(load_config(name))
        return rep.summary(), rep.passed
    return case


def _richardson():
    g = Grid(1, 128, 12.8)
    cs = preset("dirac1d")
    psi0 = gaussian_packet(g, [1.0, 0.5j], 0.0, 1.0)
    order = richardson_order(cs, harmonic(1), psi0, 0.25, 0.01)
    return {"order": order}, abs(order - 2) <= 0.2


def _free_l2():
    g = Grid(1, 256, 25.0)
    cs = preset("dirac1d")
    psi0 = gaussian_packet(g, [1.0, 1.0j], 0.0, 1.0, 1.0)
    dev = max(abs(free_dirac_propagate(cs, psi0, t).norm() / psi0.norm() - 1) for t in (-2, -1, 0.5, 2))
    # the symbol squares to (|xi|^2 + m^2) I
    xi = g.freq_mesh()
    H = dirac_symbol(cs, xi)
    sq = np.einsum("ij...,jk...->ik...", H, H)
    sq_err = float(np.abs(sq - (xi[0] ** 2 + 1)[None, None] * np.eye(2)[..., None]).max())
    return {"l2_deviation": dev, "symbol_square_error": sq_err}, dev < 1e-12 and sq_err < 1e-10


ORACLES = {
    "direct-transform": _direct_transform,
    "projector-algebra": _projector_algebra,
    "decomposition": _decomposition,
    "kernel-closed-form": _kernel_closed_form,
    "free-l2": _free_l2,
    "richardson": _richardson,
    "kernel-refinement": _experiment("kernel_decay_default.json"),
    "free-bound-refinement": _experiment("free_bound_default.json"),
    "quadratic-refinement": _experiment("quadratic_bound_default.json"),
    "subquadratic-refinement": _experiment("subquadratic_bound_default.json"),
    "picard": _experiment("picard_compare_default.json"),
    "picard-free": _experiment("picard_compare_free.json"),
    "decay-slope": _experiment("free_decay_default.json"),
}


def run_oracle(name: str, outdir) -> tuple[dict, bool]:
    """Run one case and write ``oracle_<name>.json`` with provenance."""
    from .. import __version__

    if name not in ORACLES:
        raise KeyError(name)
    t0 = time.perf_counter()
    values, ok = ORACLES[name]()
    record = {
        "case": name,
        "pass": bool(ok),
        "values": values,
        "runtime_s": round(time.perf_counter() - t0, 3),
        "provenance": {
            "package": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "machine": platform.machine(),
        },
    }
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"oracle_{name}.json").write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")
    return record, bool(ok)
