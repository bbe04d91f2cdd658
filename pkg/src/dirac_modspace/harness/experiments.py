"""Experiment runners behind the ``run`` subcommand.

Each runner turns an :class:`ExperimentConfig` into an
:class:`EstimateReport`.  Constants are measured: a run passes when the
ratio curves are finite, do not grow super-linearly on ``[0, T]`` and,
with ``stability`` set, agree with a refined companion run within the
experiment's band.
"""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..dirac import free_dirac_propagate, preset
from ..grid import Grid, SpinorField, gaussian_packet, random_band_limited
from ..modspace import NormSpec, mod_norms
from ..phaseflow import SymbolRemainder, build_s_kernel, picard_propagate
from ..potentials import potential_from_config
from ..refprop import EvolutionConfig, split_step_evolve
from ..spectral import MultiplierSymbol
from ..wavepacket import gaussian_window, wp_invert, wp_transform
from .config import ConfigError, ExperimentConfig

__all__ = ["EstimateReport", "run_experiment", "write_outputs", "make_rng", "thread_count", "RUNNERS"]


@dataclass
class EstimateReport:
    """Norm table and verdict of one experiment.

    ``rows`` hold ``(t, p, q, r, s, norm, ratio)``; ``C_T`` maps a norm
    label to the sup of its ratio curve; ``slope`` and ``residual`` are set
    by fitting experiments (one entry per norm label).
    """

    experiment: str
    rows: list = field(default_factory=list)
    C_T: dict = field(default_factory=dict)
    slope: dict = field(default_factory=dict)
    residual: dict = field(default_factory=dict)
    passed: bool = True
    checks: dict = field(default_factory=dict)
    extra_tables: dict = field(default_factory=dict)
    runtime: float = 0.0

    def check(self, name: str, ok: bool, detail=None):
        self.checks[name] = {"pass": bool(ok), "detail": detail}
        self.passed = self.passed and bool(ok)

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "C_T": self.C_T or None,
            "slope": self.slope or None,
            "residual": self.residual or None,
            "pass": self.passed,
            "checks": self.checks,
        }


def make_rng(seed: int) -> np.random.Generator:
    """64-bit counter-based generator used for every ensemble."""
    return np.random.Generator(np.random.Philox(seed))


def thread_count() -> int:
    env = os.environ.get("MODSPACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MODSPACE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _pmap(fn, items):
    n = thread_count()
    if n == 1 or len(items) == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ ensembles


def spinor_from_config(values, m: int) -> np.ndarray:
    """Complex vector from JSON: entries are numbers or ``[re, im]`` pairs."""
    try:
        v = np.array([complex(*e) if isinstance(e, (list, tuple)) else complex(e) for e in values])
    except TypeError as e:
        raise ConfigError(f"bad spinor entry: {e}") from None
    if v.shape != (m,):
        raise ConfigError(f"spinor needs {m} components, got {len(v)}")
    return v


def packet_ensemble(grid: Grid, m: int, size: int, seed: int, opts: dict) -> list[SpinorField]:
    """Random Gaussian spinor packets with centres, widths and momenta drawn uniformly."""
    rng = make_rng(seed)
    spread = float(opts.get("center_spread", 0.1 * grid.L))
    wmin, wmax = opts.get("width_range", (0.8, 1.5))
    kmax = float(opts.get("momentum", 2.0))
    out = []
    for _ in range(size):
        c = rng.uniform(-spread, spread, grid.N)
        w = rng.uniform(wmin, wmax)
        k = rng.uniform(-kmax, kmax, grid.N)
        v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        out.append(gaussian_packet(grid, v / np.linalg.norm(v), c, w, k))
    return out


def _boundary_mass(f: SpinorField, frac: float = 0.9) -> float:
    inside = np.all(np.abs(f.grid.mesh()) <= frac * f.grid.L, axis=0)
    mag = np.sum(np.abs(f.data) ** 2, axis=0)
    return float(mag[~inside].sum() / mag.sum())


# ------------------------------------------------------------------ helpers


def _norm_rows(t, specs, norms, base):
    return [(float(t), s.p, s.q, s.r, s.s, float(n), float(n / b)) for s, n, b in zip(specs, norms, base)]


def _aggregate(times, specs, per_member, base_per_member):
    # per_member[e][i][k]: norm of member e at time i for spec k; rows carry
    # the ensemble sup of norm and ratio
    rows = []
    ratios = np.array([[[n / b for n, b in zip(ti, base)] for ti in mem]
                       for mem, base in zip(per_member, base_per_member)])
    norms = np.array(per_member)
    for i, t in enumerate(times):
        for k, s in enumerate(specs):
            rows.append((float(t), s.p, s.q, s.r, s.s, float(norms[:, i, k].max()), float(ratios[:, i, k].max())))
    return rows, ratios


def _growth_ok(times, curve, slack=0.05):
    # ratio may not accelerate: the rise over the second half of [0, T]
    # is at most twice the rise over the first half, up to slack
    t = np.asarray(times)
    pos = t >= 0
    tp, cp = t[pos], curve[pos]
    if len(tp) < 3:
        return True
    T = tp.max()
    first = cp[tp <= T / 2].max() - cp[0]
    second = cp.max() - cp[tp <= T / 2].max()
    return bool(second <= 2 * max(first, 0.0) + slack)


def _label(s: NormSpec) -> str:
    return s.label()


def _finalize_bounds(report, cfg, times, specs, ratios, band, refined=None):
    sup_curve = ratios.max(axis=0)
    for k, s in enumerate(specs):
        curve = sup_curve[:, k]
        report.C_T[_label(s)] = float(curve.max())
        report.check(f"finite[{_label(s)}]", bool(np.all(np.isfinite(curve))), float(curve.max()))
        report.check(f"growth[{_label(s)}]", _growth_ok(times, curve))
    if refined is not None:
        for s in specs:
            a, b = report.C_T[_label(s)], refined.C_T[_label(s)]
            rel = abs(b - a) / a
            report.check(f"stability[{_label(s)}]", rel <= band, {"coarse": a, "refined": b, "rel": rel})


def _refined(cfg: ExperimentConfig) -> ExperimentConfig:
    solver = dict(cfg.solver)
    if "dt" in solver:
        solver["dt"] = float(solver["dt"]) / 2
    return dataclasses.replace(cfg, grid=cfg.grid.refined(), solver=solver, stability=False)


def _times(cfg: ExperimentConfig, symmetric: bool = True) -> np.ndarray:
    k = int(cfg.options.get("time_samples", 8))
    dt = cfg.solver.get("dt")
    ts = np.linspace(0.0, cfg.T, k + 1)
    if dt is not None:
        ts = np.round(ts / float(dt)) * float(dt)
    return np.concatenate([-ts[:0:-1], ts]) if symmetric else ts


# ------------------------------------------------------------------ runners


def run_free_bound(cfg: ExperimentConfig) -> EstimateReport:
    """Sup over an ensemble of ``||psi(t)|| / ||psi0||`` under the free flow, ``t`` in ``[-T, T]``."""
    cs = preset(cfg.clifford, cfg.mass)
    phi = gaussian_window(cfg.grid, cfg.window_width)
    ens = packet_ensemble(cfg.grid, cs.m, cfg.ensemble_size, cfg.seed, cfg.options)
    times = _times(cfg)
    specs = list(cfg.norms)

    def member(psi0):
        return [mod_norms(free_dirac_propagate(cs, psi0, t), phi, specs) for t in times]

    per = _pmap(member, ens)
    base = [row[int(np.argmin(np.abs(times)))] for row in per]
    report = EstimateReport(cfg.experiment)
    report.rows, ratios = _aggregate(times, specs, per, base)
    refined = run_free_bound(_refined(cfg)) if cfg.stability else None
    _finalize_bounds(report, cfg, times, specs, ratios, float(cfg.options.get("stability_band", 0.10)), refined)
    _unitary_check(report, specs, ratios, float(cfg.options.get("unitary_tol", 1e-8)))
    return report


def _unitary_check(report, specs, ratios, tol):
    # every member and every time, not only the ensemble sup
    for k, s in enumerate(specs):
        if s.p == 2 and s.q == 2 and s.r == 0 and s.s == 0:
            dev = float(np.max(np.abs(ratios[..., k] - 1.0)))
            report.check("unitary[2,2]", dev <= tol, dev)


def _evolve_ensemble(cfg, cs, pot, ens, times, specs, phi):
    dt = float(cfg.solver.get("dt", 1e-3))

    def member(psi0):
        out = {}
        for sign in (1, -1):
            ts = [t for t in times if np.sign(t) in (0, sign)]
            T = sign * max(abs(t) for t in ts)
            traj = split_step_evolve(cs, pot, psi0, EvolutionConfig(dt, T), times=ts)
            for t, f in zip(traj.times, traj.fields):
                out[float(t)] = mod_norms(f, phi, specs), f.norm()
        return [out[float(t)] for t in times]

    return _pmap(member, ens)


def _potential_bound(cfg: ExperimentConfig, kind: str):
    cs = preset(cfg.clifford, cfg.mass)
    try:
        pot = potential_from_config(cfg.potential, cs, cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    specs = list(cfg.norms)
    if kind == "quadratic":
        if pot.hermitian is not None:
            raise ConfigError("quadratic-bound expects a quadratic and optionally a bounded part")
        for s in specs:
            if s.p != s.q:
                raise ConfigError(f"quadratic-bound uses p = q norms, got {s.label()}")
    elif pot.quadratic is not None:
        raise ConfigError("subquadratic-bound expects a Hermitian C^1 and optionally a bounded part")
    pot.check(cfg.grid, cs.m)
    phi = gaussian_window(cfg.grid, cfg.window_width)
    ens = packet_ensemble(cfg.grid, cs.m, cfg.ensemble_size, cfg.seed, cfg.options)
    for psi0 in ens:
        bm = _boundary_mass(psi0)
        if bm > 1e-6:
            raise ConfigError(f"initial data has boundary mass {bm:.1e}; enlarge the box or shrink center_spread")
    times = _times(cfg)
    per = _evolve_ensemble(cfg, cs, pot, ens, times, specs, phi)
    i0 = int(np.argmin(np.abs(times)))
    norms = [[r[0] for r in mem] for mem in per]
    l2 = np.array([[r[1] / mem[i0][1] for r in mem] for mem in per])
    report = EstimateReport(cfg.experiment)
    report.rows, ratios = _aggregate(times, specs, norms, [mem[i0] for mem in norms])
    report.extra_tables["l2_growth"] = (times, l2.max(axis=0))
    return report, ratios, pot, times, specs


def run_quadratic_bound(cfg: ExperimentConfig) -> EstimateReport:
    """Split-step evolution with a quadratic (plus optional bounded) potential, norms with ``p = q``."""
    report, ratios, pot, times, specs = _potential_bound(cfg, "quadratic")
    refined = run_quadratic_bound(_refined(cfg)) if cfg.stability else None
    _finalize_bounds(report, cfg, times, specs, ratios, float(cfg.options.get("stability_band", 0.15)), refined)
    if pot.is_hermitian:
        _unitary_check(report, specs, ratios, float(cfg.options.get("unitary_tol", 1e-7)))
    return report


def run_subquadratic_bound(cfg: ExperimentConfig) -> EstimateReport:
    """Split-step evolution with a sub-quadratic ``V1`` plus bounded ``V2``, mixed ``(p, q)``."""
    report, ratios, pot, times, specs = _potential_bound(cfg, "subquadratic")
    refined = run_subquadratic_bound(_refined(cfg)) if cfg.stability else None
    _finalize_bounds(report, cfg, times, specs, ratios, float(cfg.options.get("stability_band", 0.15)), refined)
    if pot.is_hermitian:
        _unitary_check(report, specs, ratios, float(cfg.options.get("unitary_tol", 1e-7)))
    elif pot.bounded is not None:
        _gronwall_check(report, cfg, pot)
    return report


def _gronwall_check(report, cfg, pot):
    # L2 growth exponent fitted on t >= 0 against the sup of |V2|
    ts, curve = report.extra_tables["l2_growth"]
    pos = ts > 0
    c_fit = float(np.sum(ts[pos] * np.log(curve[pos])) / np.sum(ts[pos] ** 2))
    vsup = pot.bounded_sup(cfg.grid)
    within = abs(c_fit - vsup) <= 0.5 * vsup
    bound = float(np.max(curve[ts >= 0])) <= math.exp(vsup * cfg.T) * (1 + 1e-9)
    report.check("gronwall_band", within and bound, {"c_fit": c_fit, "sup_V2": vsup, "T": cfg.T})
    report.slope["gronwall_c"] = c_fit


def run_free_decay(cfg: ExperimentConfig) -> EstimateReport:
    """Log-log slope of ``||psi(t)||_{M^{p,q}_{0,-2 sigma}} / ||psi0||_{M^{p',q}}``.

    ``2 sigma = (N + 2) theta (1/2 - 1/p)`` and the expected slope is
    ``-N theta (1/2 - 1/p)``.
    """
    if cfg.mass <= 0:
        raise ConfigError("free-decay needs a positive mass")
    o = cfg.options
    cs = preset(cfg.clifford, cfg.mass)
    grid, N = cfg.grid, cfg.grid.N
    theta = float(o.get("theta", 1.0))
    q = float(o.get("q", 2.0))
    ps = [float(p) for p in o.get("p", [2, 4, 6])]
    for p in ps:
        if not 2 <= p < math.inf:
            raise ConfigError(f"free-decay needs 2 <= p < inf, got {p}")
    tmin, tmax = float(o.get("t_min", 5.0)), float(o.get("t_max", 40.0))
    if not 0 < tmin < tmax <= cfg.T + 1e-12:
        raise ConfigError("need 0 < t_min < t_max <= T")
    nt = int(o.get("time_samples", 12))
    times = np.geomspace(tmin, tmax, nt)
    phi = gaussian_window(grid, cfg.window_width)
    spinor = spinor_from_config(o.get("spinor", [1.0] + [0.0] * (cs.m - 1)), cs.m)
    psi0 = gaussian_packet(grid, spinor, 0.0, float(o.get("packet_width", 1.0)), 0.0)
    sigmas = [(N + 2) * theta * (0.5 - 1 / p) / 2 for p in ps]
    num_specs = [NormSpec(p, q, 0.0, 0.0 - 2 * sg) for p, sg in zip(ps, sigmas)]
    den_specs = [NormSpec(p / (p - 1), q, 0.0, 0.0) for p in ps]
    base = mod_norms(psi0, phi, den_specs)

    def at(t):
        f = free_dirac_propagate(cs, psi0, t)
        bm = _boundary_mass(f)
        return mod_norms(f, phi, num_specs), bm

    res = _pmap(at, list(times))
    report = EstimateReport(cfg.experiment)
    worst = max(bm for _, bm in res)
    if worst > 1e-6:
        raise ConfigError(
            f"boundary mass {worst:.1e} exceeds 1e-6: the box is too small to separate "
            "dispersion from wraparound; increase L (and n) or lower t_max")
    ratios = np.array([[n / b for n, b in zip(norms, base)] for norms, _ in res])
    for i, t in enumerate(times):
        for k, s in enumerate(num_specs):
            report.rows.append((float(t), s.p, s.q, s.r, s.s, float(res[i][0][k]), float(ratios[i, k])))
    fit_rows = []
    lt = np.log(times)
    for k, (p, s) in enumerate(zip(ps, num_specs)):
        ly = np.log(ratios[:, k])
        A = np.vstack([lt, np.ones_like(lt)]).T
        coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
        slope = float(coef[0])
        resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
        expected = -N * theta * (0.5 - 1 / p)
        label = s.label()
        report.slope[label] = slope
        report.residual[label] = resid
        report.C_T[label] = float(ratios[:, k].max())
        if expected == 0:
            ok = abs(slope) <= float(o.get("zero_slope_tol", 0.05))
        else:
            ok = abs(slope - expected) <= float(o.get("slope_rel_tol", 0.20)) * abs(expected)
        report.check(f"slope[{label}]", ok, {"slope": slope, "expected": expected})
        fit_rows.append((s.p, s.q, s.r, s.s, slope, expected, resid))
    report.extra_tables["fit"] = fit_rows
    return report


def _symbol_from_config(cfg: ExperimentConfig):
    name = cfg.options.get("symbol", "dirac")
    if name == "dirac":
        return preset(cfg.clifford, cfg.mass)
    if name == "zero":
        m = preset(cfg.clifford, cfg.mass).m
        return MultiplierSymbol(lambda xi: np.zeros((m, m) + xi.shape[1:]), m=m, hermitian=True)
    if name == "laplacian":
        return MultiplierSymbol(lambda xi: np.sum(xi**2, axis=0), hermitian=True)
    raise ConfigError(f"unknown symbol {name!r}; choose dirac, zero or laplacian")


def run_kernel_decay(cfg: ExperimentConfig) -> EstimateReport:
    """Table of ``max <z>^{2n} |d^beta S|`` on the grid and its refinement, plus the symbol bound check."""
    sym = _symbol_from_config(cfg)
    n = int(cfg.options.get("decay_order", 1))
    k = float(cfg.options.get("symbol_order", 1.0))
    band = float(cfg.options.get("stability_band", 0.10))
    try:
        coarse = build_s_kernel(sym, gaussian_window(cfg.grid, cfg.window_width), n).decay_table()
        fine = build_s_kernel(sym, gaussian_window(cfg.grid.refined(), cfg.window_width), n).decay_table()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    report = EstimateReport(cfg.experiment)
    table = []
    stable = True
    for beta in coarse:
        a, b = coarse[beta], fine[beta]
        rel = abs(b - a) / a if a > 0 else (0.0 if b == 0 else math.inf)
        stable = stable and np.isfinite(a) and rel <= band
        table.append(("".join(map(str, beta)), n, cfg.grid.n, a, b, rel))
    report.extra_tables["kernel"] = table
    bound_ok, bounds = SymbolRemainder(sym).satisfies_bound(cfg.grid.N, k)
    expect = bool(cfg.options.get("expect_symbol_bound", True))
    report.check("symbol_bound", bound_ok == expect, {"satisfied": bound_ok, "expected": expect})
    if expect:
        report.check("kernel_stability", stable)
    report.C_T = {"".join(map(str, b)): v for b, v in coarse.items()}
    return report


def run_picard_compare(cfg: ExperimentConfig) -> EstimateReport:
    """Relative L2 error of each Picard iterate at ``T`` against the split-step reference."""
    cs = preset(cfg.clifford, cfg.mass)
    try:
        pot = potential_from_config(cfg.potential, cs, cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    s, o = cfg.solver, cfg.options
    phi = gaussian_window(cfg.grid, cfg.window_width)
    spinor = spinor_from_config(o.get("spinor", [1.0] + [0.0] * (cs.m - 1)), cs.m)
    psi0 = gaussian_packet(cfg.grid, spinor, o.get("center", 0.0),
                           float(o.get("packet_width", 1.0)), o.get("momentum", 0.0))
    res = picard_propagate(cs, pot, phi, psi0, cfg.T, iterations=int(s.get("iterations", 3)),
                           snapshots_per_unit=int(s.get("snapshots_per_unit", 64)),
                           substeps=int(s.get("substeps", 4)),
                           quadrature=s.get("quadrature", "trapezoid"))
    if pot.is_zero:
        ref = free_dirac_propagate(cs, psi0, cfg.T)
    else:
        ref = split_step_evolve(cs, pot, psi0, EvolutionConfig(float(s.get("dt", 1e-4)), cfg.T)).final
    errs = [(u - ref).norm() / psi0.norm() for u in res.iterate_spinors()]
    report = EstimateReport(cfg.experiment)
    report.extra_tables["picard"] = [(k, e) + (tuple(res.history[k - 1][1:]) if k else (math.nan, math.nan))
                                     for k, e in enumerate(errs)]
    report.C_T = {"final_error": errs[-1]}
    tol = float(o.get("tolerance", 1e-3))
    report.check("final_error", errs[-1] < tol, {"error": errs[-1], "tolerance": tol})
    if o.get("require_monotone", True):
        report.check("monotone", all(b < a for a, b in zip(errs, errs[1:])), errs)
    return report


def run_transform_roundtrip(cfg: ExperimentConfig) -> EstimateReport:
    """Inversion error of ``W_phi`` on random band-limited fields."""
    cs = preset(cfg.clifford, cfg.mass)
    rng = make_rng(cfg.seed)
    phi = gaussian_window(cfg.grid, cfg.window_width)
    cutoff = float(cfg.options.get("cutoff", 0.5 * np.pi / cfg.grid.dx))
    errs = []
    for _ in range(cfg.ensemble_size):
        f = random_band_limited(cfg.grid, cs.m, rng, cutoff)
        g = wp_invert(phi, phi, wp_transform(phi, f))
        errs.append((g - f).norm() / f.norm())
    report = EstimateReport(cfg.experiment)
    report.C_T = {"max_error": max(errs)}
    tol = float(cfg.options.get("tolerance", 1e-9))
    report.check("roundtrip", max(errs) < tol, {"max_error": max(errs), "tolerance": tol})
    return report


RUNNERS = {
    "free-bound": run_free_bound,
    "free-decay": run_free_decay,
    "quadratic-bound": run_quadratic_bound,
    "subquadratic-bound": run_subquadratic_bound,
    "kernel-decay": run_kernel_decay,
    "picard-compare": run_picard_compare,
    "transform-roundtrip": run_transform_roundtrip,
}


def run_experiment(cfg: ExperimentConfig) -> EstimateReport:
    t0 = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg)
    report.runtime = time.perf_counter() - t0
    return report


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else _fmt(r) for r in row) + "\n")


def write_outputs(report: EstimateReport, outdir) -> list:
    """Write CSV tables and ``summary.json``; returns the paths written.

    Floats are written with ``repr`` so identical runs give identical bytes.
    """
    import json
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if report.rows:
        _write_csv(out / "norms.csv", ["t", "p", "q", "r", "s", "norm", "ratio"], report.rows)
        written.append(out / "norms.csv")
    if "fit" in report.extra_tables:
        _write_csv(out / "fit.csv", ["p", "q", "r", "s", "slope", "expected", "residual"], report.extra_tables["fit"])
        written.append(out / "fit.csv")
    if "kernel" in report.extra_tables:
        _write_csv(out / "kernel_decay.csv", ["beta", "n", "points", "coarse", "refined", "rel_change"],
                   report.extra_tables["kernel"])
        written.append(out / "kernel_decay.csv")
    if "picard" in report.extra_tables:
        _write_csv(out / "picard.csv", ["iteration", "rel_error", "sup_diff", "l2_diff"], report.extra_tables["picard"])
        written.append(out / "picard.csv")
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True, default=_json_default) + "\n")
    written.append(out / "summary.json")
    return written


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
