"""Measurement procedures bound to experiment configurations.

Every runner takes a resolved configuration (see :func:`resolve_config`)
and returns an :class:`Outcome` holding CSV rows, a JSON summary and a
pass flag.  :data:`ACCEPTANCE` lists the configuration of each acceptance
criterion; :func:`run_criterion` executes one of them.
"""

from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dyadic import (
    build_angular_family,
    build_lp_family,
    build_second_frequency_family,
)
from .fio import (
    FioOperator,
    baseline_constant,
    diagonal_norm,
    lower_bound_ratio,
    operator_norm,
    orthogonality_scan,
    piece_norm,
    random_density,
    symbol,
)
from .grid import (
    build_ball_grid,
    build_lattice_grid,
    build_polar_grid,
    polar_l2_norm,
    spatial_l2_norm,
)
from .kernel import KernelProbe, decay_ratio_scan, flat_comparison_gap, schur_row_sum
from .parametrix import (
    assemble_system,
    estimate_ratio,
    evolve_flat,
    flat_closed_form,
    flat_estimate_ratio,
    gaussian_data,
    random_data,
    solve_data,
    spectral_evolution,
)
from .phase import PRESETS, TrigPolynomial, check_assumptions, flat_phase, perturbed_phase

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "COMMANDS",
    "ACCEPTANCE",
    "Outcome",
    "resolve_config",
    "validate_config",
    "run_command",
    "run_criterion",
]

PLANCHEREL = (2 * np.pi) ** 1.5


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending key."""

    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = tuple(path)


DEFAULTS = {
    "command": None,
    "seed": 0,
    "out": "roughfio-out",
    "phase": {"kind": "perturbed", "epsilon": 0.05, "preset": "default", "coefficients": None},
    "grid": {
        "frequency": {"j_min": -6, "j_max": 1, "radial_per_octave": 8, "angular_nodes": 2048},
        "spatial": {"kind": "lattice", "half_width": 5.0, "n": 16},
    },
    "dyadic": {"j_max": None, "delta": 0.25, "alpha": 0.125},
    "params": {},
}

COMMAND_DEFAULTS = {
    "check-assumptions": {"slack": 250.0, "n_directions": 4},
    "norm": {"symbol": "unit", "epsilons": None, "power_iters": 60, "tol": 1e-5,
             "reference": "plancherel", "rel_tol": 0.01, "ratio_range": [1.6, 2.4]},
    "ortho-freq": {"windows": [[-1, 0, 1, 2], [0, 1, 2, 3]], "min_gap": 3, "ensemble": 1,
                   "stability": 2.0},
    "ortho-angle": {"j": 2, "max_patches": 24, "ensemble": 1, "bins": [1.0, 2.0, 3.0, 4.5, 7.0, 12.0]},
    "diag": {"octaves": None, "ensemble": 1, "factor": 2.0},
    "kernel-decay": {"js": [4, 5, 6], "nu": 0, "pairs_per_shell": 8, "stability": 4.0,
                     "flat_factor": 2.0, "far_bound": 0.01},
    "schur": {"js": [4, 5, 6], "nu": 0, "x": [0.3, -0.2, 0.1], "extent": 40.0, "factor": 2.0},
    "compare-sjnu": {"ensemble": 8, "min_ratio": 0.5, "gap_j": 0, "gap_patches": 4},
    "solve": {"tol": 1e-6, "max_iter": 200, "ensemble": 20, "width": 1.2, "factor": 2.0},
    "flat-roundtrip": {"tol": 1e-6, "max_iter": 200, "width": 1.2, "error_bound": 1e-3},
    "evolve-flat": {"t": 0.5, "tol": 1e-6, "max_iter": 200, "width": 1.2, "error_bound": 1e-3,
                    "trace_bound": 1e-3, "dt": 1e-3},
    "partition": {"samples": 10000, "j_max": 6, "angular_js": [0, 2, 4, 6], "bound": 1e-10},
    "decomposition": {"nu_octave": 1, "k_piece": [1, 0], "bound": 1e-8},
    "identity": {"bound": 1e-3},
    "suite": {"criteria": None},
}

COMMANDS = tuple(COMMAND_DEFAULTS)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _merge(base: dict, over: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key in out and isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = _merge(out[key], val, path + (key,))
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve_config(raw: dict, command: str | None = None) -> dict:
    """Materialize all defaults and validate."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", (key,))
    cfg = _merge(DEFAULTS, raw)
    if command is not None:
        cfg["command"] = command
    cmd = cfg["command"]
    if cmd not in COMMAND_DEFAULTS:
        raise ConfigError(f"unknown command {cmd!r}", ("command",))
    params = cfg.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping", ("params",))
    bad = set(params) - set(COMMAND_DEFAULTS[cmd])
    if bad:
        key = sorted(bad)[0]
        raise ConfigError(f"unknown parameter {key!r} for {cmd}", ("params", key))
    cfg["params"] = _merge(COMMAND_DEFAULTS[cmd], params)
    validate_config(cfg)
    return cfg


def _require(cond, message, path):
    if not cond:
        raise ConfigError(message, path)


def validate_config(cfg: dict) -> None:
    ph = cfg["phase"]
    _require(ph.get("kind") in ("flat", "perturbed"), "phase kind must be flat or perturbed",
             ("phase", "kind"))
    coeffs = ph.get("coefficients")
    if coeffs is None:
        _require(ph.get("preset") in PRESETS, f"unknown preset {ph.get('preset')!r}",
                 ("phase", "preset"))
    else:
        _require(isinstance(coeffs, dict) and {"amplitudes", "s_freqs", "omega_freqs"} <= set(coeffs),
                 "coefficients need amplitudes, s_freqs and omega_freqs", ("phase", "coefficients"))
        try:
            TrigPolynomial.from_lists(**coeffs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid coefficients: {exc}", ("phase", "coefficients")) from exc
    eps = ph.get("epsilon")
    _require(isinstance(eps, (int, float)) and eps >= 0, "epsilon must be >= 0", ("phase", "epsilon"))
    dy = cfg["dyadic"]
    delta = dy.get("delta")
    _require(isinstance(delta, (int, float)) and 0 < delta <= 1, "delta must lie in (0, 1]",
             ("dyadic", "delta"))
    eff = 0.0 if ph["kind"] == "flat" else float(eps)
    _require(delta > math.sqrt(eff), f"delta = {delta} must exceed sqrt(epsilon) = {math.sqrt(eff):.4g}",
             ("dyadic", "delta"))
    alpha = dy.get("alpha")
    _require(isinstance(alpha, (int, float)) and 0 < alpha < 0.2, "alpha must lie in (0, 0.2)",
             ("dyadic", "alpha"))
    jm = dy.get("j_max")
    _require(jm is None or isinstance(jm, int), "j_max must be an integer", ("dyadic", "j_max"))
    fr = cfg["grid"]["frequency"]
    if jm is not None:
        fr["j_max"] = jm
    for key in ("j_min", "j_max", "radial_per_octave", "angular_nodes"):
        _require(isinstance(fr.get(key), int), f"{key} must be an integer", ("grid", "frequency", key))
    _require(fr["j_min"] <= fr["j_max"], "j_min must not exceed j_max", ("grid", "frequency", "j_min"))
    sp = cfg["grid"]["spatial"]
    _require(sp.get("kind") in ("lattice", "ball"), "spatial kind must be lattice or ball",
             ("grid", "spatial", "kind"))
    _require(isinstance(cfg.get("out"), str) and cfg["out"] != "", "out must be a directory name",
             ("out",))
    seed = cfg.get("seed")
    _require(isinstance(seed, int) and 0 <= seed < 2**64, "seed must be an unsigned 64-bit integer",
             ("seed",))


def make_phase(cfg: dict, epsilon: float | None = None):
    """Phase of the configuration, optionally at another perturbation size."""
    ph = cfg["phase"]
    eps = float(ph["epsilon"]) if epsilon is None else float(epsilon)
    if epsilon is None and ph["kind"] == "flat" or eps == 0:
        return flat_phase()
    poly = None if ph.get("coefficients") is None else TrigPolynomial.from_lists(**ph["coefficients"])
    return perturbed_phase(eps, ph["preset"], poly)


def make_grids(cfg: dict):
    fr = cfg["grid"]["frequency"]
    fgrid = build_polar_grid(fr["j_min"], fr["j_max"], fr["radial_per_octave"], fr["angular_nodes"])
    sp = cfg["grid"]["spatial"]
    if sp["kind"] == "lattice":
        sgrid = build_lattice_grid(float(sp.get("half_width", 5.0)), int(sp.get("n", 16)))
    else:
        sgrid = build_ball_grid(float(sp.get("radius", 3.0)), int(sp.get("n_radial", 16)),
                                int(sp.get("n_angular", 128)))
    return fgrid, sgrid


def make_operator(cfg: dict, phase=None, kind: str = "unit", **kw) -> FioOperator:
    fgrid, sgrid = make_grids(cfg)
    phase = make_phase(cfg) if phase is None else phase
    return FioOperator(phase, symbol(kind), fgrid, sgrid, delta=cfg["dyadic"]["delta"],
                       alpha=cfg["dyadic"]["alpha"], **kw)


def _rng(cfg, *counter):
    return np.random.default_rng([cfg["seed"], *counter])


def _densities(op, cfg, count, stream):
    return [random_density(op.fgrid, _rng(cfg, stream, m)) for m in range(count)]


@dataclass
class Outcome:
    name: str
    passed: bool
    summary: dict
    rows: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_check_assumptions(cfg):
    p = cfg["params"]
    fgrid, sgrid = make_grids(cfg)
    phase = make_phase(cfg)
    rep = check_assumptions(phase, fgrid, sgrid, slack=p["slack"], n_directions=p["n_directions"],
                            seed=cfg["seed"])
    rows = rep.to_rows()
    return Outcome("check-assumptions", rep.passed,
                   {"epsilon": rep.epsilon, "slack": rep.slack,
                    "failed": [r["name"] for r in rows if not r["passed"]]}, rows)


def run_norm(cfg):
    """Operator norm; with ``epsilons`` the successive ratios over that sweep."""
    p = cfg["params"]
    if p["epsilons"]:
        rows = []
        for i, eps in enumerate(p["epsilons"]):
            phase = make_phase(cfg, eps)
            op = make_operator(cfg, phase, p["symbol"], check_patches=False)
            est = operator_norm(op, 1, p["power_iters"], cfg["seed"], p["tol"])
            rows.append({"epsilon": float(eps), "norm": est.value, "iterations": est.iterations,
                         "converged": est.converged})
        norms = [r["norm"] for r in rows]
        ratios = [b / a if a > 0 else float("inf") for a, b in zip(norms[:-1], norms[1:])]
        lo, hi = p["ratio_range"]
        passed = all(lo <= r <= hi for r in ratios)
        return Outcome("norm", passed, {"norms": norms, "ratios": ratios}, rows)
    op = make_operator(cfg, kind=p["symbol"], check_patches=False)
    est = operator_norm(op, 1, p["power_iters"], cfg["seed"], p["tol"])
    ref = PLANCHEREL if p["reference"] == "plancherel" else baseline_constant(op.fgrid, op.sgrid)
    rel = abs(est.value / ref - 1)
    rows = [{"iteration": i + 1, "estimate": v} for i, v in enumerate(est.history)]
    return Outcome("norm", rel <= p["rel_tol"],
                   {"norm": est.value, "reference": ref, "relative_deviation": rel,
                    "converged": est.converged, "iterations": est.iterations}, rows)


def run_ortho_freq(cfg):
    p = cfg["params"]
    op = make_operator(cfg, check_patches=False)
    rows = []
    constants = []
    for f in _densities(op, cfg, p["ensemble"], 1):
        per_window = []
        for w, window in enumerate(p["windows"]):
            tab = orthogonality_scan(op, f, "frequency", octaves=window, min_gap=p["min_gap"])
            for r in tab.rows:
                rows.append({"window": w, **r})
            per_window.append(tab.constant)
        constants.append(per_window)
    C = np.max(np.array(constants), axis=0)
    positive = C[C > 0]
    spread = float(positive.max() / positive.min()) if len(positive) == len(C) else float("inf")
    passed = spread <= p["stability"] and all(r["measured"] <= r["envelope"] * C.max() for r in rows)
    return Outcome("ortho-freq", passed,
                   {"constants": C.tolist(), "spread": spread, "pairs": len(rows)}, rows)


def run_ortho_angle(cfg):
    p = cfg["params"]
    op = make_operator(cfg)
    rows = []
    for m, f in enumerate(_densities(op, cfg, p["ensemble"], 2)):
        tab = orthogonality_scan(op, f, "angle", j=p["j"], max_patches=p["max_patches"],
                                 seed=cfg["seed"] + m)
        rows.extend(tab.rows)
    from .fio import DecayTable

    table = DecayTable("angle", rows, max((r["ratio"] for r in rows), default=0.0))
    med = table.medians_by_bin(p["bins"])
    medians = [m for _, m, _ in med]
    monotone = all(b <= a for a, b in zip(medians[:-1], medians[1:]))
    below = all(r["measured"] <= table.constant * r["envelope"] * (1 + 1e-12) for r in rows)
    return Outcome("ortho-angle", monotone and below and len(medians) >= 3,
                   {"constant": table.constant, "medians": med, "monotone": monotone,
                    "pairs": len(rows)}, rows)


def run_diag(cfg):
    """Largest diagonal ratio over all pieces, against the same maximum for the flat phase."""
    p = cfg["params"]
    op = make_operator(cfg)
    flat = op.with_(phase=flat_phase())
    rows = []
    octs = p["octaves"] or op.octaves
    for m, f in enumerate(_densities(op, cfg, p["ensemble"], 3)):
        floor = 1e-6 * polar_l2_norm(f, op.fgrid)
        for j in octs:
            for nu in range(len(op.angular_family(j))):
                res = diagonal_norm(op, f, j, nu, floor=floor)
                if res.skipped:
                    continue
                ref = diagonal_norm(flat, f, j, nu, floor=floor)
                rows.append({"sample": m, "j": j, "nu": nu, "norm": res.norm, "gamma": res.gamma,
                             "ratio": res.ratio, "flat_ratio": ref.ratio})
    worst = max(r["ratio"] for r in rows)
    base = max(r["flat_ratio"] for r in rows)
    rel = worst / base
    return Outcome("diag", 1 / p["factor"] <= rel <= p["factor"],
                   {"max_ratio": worst, "flat_max_ratio": base, "relative": rel,
                    "plancherel": PLANCHEREL, "pieces": len(rows)}, rows)


def run_kernel_decay(cfg):
    p = cfg["params"]
    phase = make_phase(cfg)
    rows = []
    sups = {}
    flat_sups = {}
    far = 0.0
    for j in p["js"]:
        fam = build_angular_family(j, cfg["dyadic"]["delta"])
        probe = KernelProbe(j, p["nu"], fam, seed=cfg["seed"], pairs_per_shell=p["pairs_per_shell"])
        pairs = probe.pairs()
        rep = decay_ratio_scan(probe, phase, pairs=pairs)
        flat = rep if phase.epsilon == 0 else decay_ratio_scan(probe, flat_phase(), pairs=pairs)
        sups[j] = rep.sup_ratio
        flat_sups[j] = flat.sup_ratio
        far = max(far, rep.far_max)
        for r in rep.rows:
            rows.append({"j": j, "A": r["A"], "B": r["B"], "abs_K": r["K"], "envelope": r["envelope"],
                         "ratio": r["ratio"], "x": list(map(float, r["x"])),
                         "y": list(map(float, r["y"]))})
    vals = np.array(list(sups.values()))
    stability = float(vals.max() / vals.min())
    vs_flat = max(max(sups[j] / flat_sups[j], flat_sups[j] / sups[j]) for j in sups)
    passed = stability < p["stability"] and vs_flat <= p["flat_factor"] and far < p["far_bound"]
    return Outcome("kernel-decay", passed,
                   {"sup_ratio": {str(k): v for k, v in sups.items()},
                    "flat_sup_ratio": {str(k): v for k, v in flat_sups.items()},
                    "stability": stability, "flat_factor": vs_flat, "far_max": far}, rows)


def run_schur(cfg):
    p = cfg["params"]
    phase = make_phase(cfg)
    rows = []
    for j in p["js"]:
        fam = build_angular_family(j, cfg["dyadic"]["delta"])
        res = schur_row_sum(phase, fam, j, p["nu"], np.array(p["x"], dtype=float), extent=p["extent"])
        rows.append({"j": j, "row_sum": res.row_sum, "flat_row_sum": res.flat_row_sum,
                     "normalized": res.normalized})
    norm = np.array([r["normalized"] for r in rows])
    raw = np.array([r["row_sum"] for r in rows])
    spread = float(norm.max() / norm.min())
    raw_spread = float(raw.max() / raw.min())
    return Outcome("schur", spread <= p["factor"] and raw_spread <= p["factor"],
                   {"normalized_spread": spread, "raw_spread": raw_spread}, rows)


def run_compare_sjnu(cfg):
    p = cfg["params"]
    op = make_operator(cfg, check_patches=False)
    lb = lower_bound_ratio(op, p["ensemble"], seed=cfg["seed"], baseline=PLANCHEREL)
    rows = [{"quantity": "lower_bound", "sample": i, "value": r} for i, r in enumerate(lb.ratios)]
    f = random_density(op.fgrid, _rng(cfg, 4, 0))
    gaps = {}
    j = p["gap_j"]
    for delta in (cfg["dyadic"]["delta"], cfg["dyadic"]["delta"] / 2):
        opd = op.with_(delta=delta)
        fam = opd.angular_family(j)
        norms = np.array([piece_norm(opd, f, j, nu) for nu in range(len(fam))])
        chosen = np.argsort(-norms)[: p["gap_patches"]]
        vals = [flat_comparison_gap(opd, f, j, int(nu)) for nu in chosen]
        gaps[delta] = float(np.max(vals))
        for nu, v in zip(chosen, vals):
            rows.append({"quantity": "gap", "delta": delta, "nu": int(nu), "value": v})
    d0, d1 = sorted(gaps, reverse=True)
    passed = lb.ratio >= p["min_ratio"] and gaps[d1] < gaps[d0]
    return Outcome("compare-sjnu", passed,
                   {"min_ratio": lb.ratio, "gap": {str(k): v for k, v in gaps.items()}}, rows)


def _solve_grids(cfg):
    fgrid, sgrid = make_grids(cfg)
    if not sgrid.is_lattice:
        raise ConfigError("solves need a lattice spatial grid", ("grid", "spatial", "kind"))
    return fgrid, sgrid


def run_flat_roundtrip(cfg):
    p = cfg["params"]
    fgrid, sgrid = _solve_grids(cfg)
    system = assemble_system(flat_phase(), fgrid, sgrid)
    rows = []
    worst = 0.0
    for which in ("phi0", "phi1"):
        data = gaussian_data(sgrid, which, p["width"])
        res = solve_data(system, data, p["tol"], p["max_iter"])
        ref = flat_closed_form(data, fgrid)
        num = polar_l2_norm(res.pair.g_plus - ref.g_plus, fgrid) ** 2
        num += polar_l2_norm(res.pair.g_minus - ref.g_minus, fgrid) ** 2
        den = polar_l2_norm(ref.g_plus, fgrid) ** 2 + polar_l2_norm(ref.g_minus, fgrid) ** 2
        err = math.sqrt(num / den)
        worst = max(worst, err)
        rows.append({"data": which, "relative_error": err, "residual": res.residual,
                     "iterations": res.iterations, "misfit": res.misfit,
                     "ratio": estimate_ratio(res.pair, data)})
    return Outcome("flat-roundtrip", worst <= p["error_bound"], {"relative_error": worst}, rows)


def run_solve(cfg):
    p = cfg["params"]
    fgrid, sgrid = _solve_grids(cfg)
    phase = make_phase(cfg)
    system = assemble_system(phase, fgrid, sgrid)
    rows = []
    for m in range(p["ensemble"]):
        data = random_data(sgrid, _rng(cfg, 5, m), width=p["width"])
        res = solve_data(system, data, p["tol"], p["max_iter"])
        ratio = estimate_ratio(res.pair, data)
        flat = flat_estimate_ratio(data, fgrid)
        rows.append({"sample": m, "residual": res.residual, "iterations": res.iterations,
                     "converged": res.converged, "misfit": res.misfit, "ratio": ratio,
                     "flat_ratio": flat, "relative": ratio / flat})
    worst_res = max(r["residual"] for r in rows)
    worst_rel = max(r["relative"] for r in rows)
    passed = worst_res <= p["tol"] and worst_rel <= p["factor"]
    return Outcome("solve", passed,
                   {"max_residual": worst_res, "max_relative_ratio": worst_rel,
                    "max_ratio": max(r["ratio"] for r in rows),
                    "max_flat_ratio": max(r["flat_ratio"] for r in rows)}, rows)


def run_evolve_flat(cfg):
    p = cfg["params"]
    fgrid, sgrid = _solve_grids(cfg)
    system = assemble_system(flat_phase(), fgrid, sgrid)
    rng = _rng(cfg, 6, 0)
    data = random_data(sgrid, rng, width=p["width"])
    res = solve_data(system, data, p["tol"], p["max_iter"])
    pair = res.pair

    def rel(a, b):
        return spatial_l2_norm(a - b, sgrid) / spatial_l2_norm(b, sgrid)

    t, dt = p["t"], p["dt"]
    field_t = evolve_flat(pair, t, sgrid)
    err_t = rel(field_t, spectral_evolution(data, t))
    trace0 = rel(evolve_flat(pair, 0.0, sgrid), data.phi0)
    dtrace = (evolve_flat(pair, dt, sgrid) - evolve_flat(pair, -dt, sgrid)) / (2 * dt)
    trace1 = rel(dtrace, data.phi1)
    rows = [{"quantity": "evolution_error", "t": t, "value": err_t},
            {"quantity": "trace_phi0", "t": 0.0, "value": trace0},
            {"quantity": "trace_phi1", "t": 0.0, "value": trace1},
            {"quantity": "solve_residual", "t": 0.0, "value": res.residual}]
    passed = err_t <= p["error_bound"] and trace0 <= p["trace_bound"] and trace1 <= p["trace_bound"]
    return Outcome("evolve-flat", passed,
                   {"evolution_error": err_t, "trace_phi0": trace0, "trace_phi1": trace1,
                    "solve_residual": res.residual}, rows)


def run_partition(cfg):
    p = cfg["params"]
    rng = _rng(cfg, 7)
    n = p["samples"]
    rows = []
    lp = build_lp_family(p["j_max"])
    lam = rng.uniform(0, lp.covered_range[1], n)
    rows.append({"family": "frequency", "max_error": float(np.abs(lp.total(lam) - 1).max())})
    for j in p["angular_js"]:
        fam = build_angular_family(j, cfg["dyadic"]["delta"])
        om = rng.standard_normal((n, 3))
        om /= np.linalg.norm(om, axis=1, keepdims=True)
        rows.append({"family": f"angular_j{j}",
                     "max_error": float(np.abs(fam.evaluate(om).sum(axis=1) - 1).max())})
        sec = build_second_frequency_family(j, cfg["dyadic"]["alpha"], 1.0)
        lo, hi = sec.interval
        lam = rng.uniform(lo, hi, n)
        rows.append({"family": f"refined_j{j}", "max_error": float(np.abs(sec.total(lam) - 1).max())})
    worst = max(r["max_error"] for r in rows)
    return Outcome("partition", worst <= p["bound"], {"max_error": worst}, rows)


def run_decomposition(cfg):
    p = cfg["params"]
    op = make_operator(cfg)
    f = random_density(op.fgrid, _rng(cfg, 8, 0))
    whole = op.apply(f)
    nrm = spatial_l2_norm(whole, op.sgrid)
    parts = {j: op.apply(f, mask=op.mask(j)) for j in op.lp.indices}
    err_j = spatial_l2_norm(sum(parts.values()) - whole, op.sgrid) / nrm
    j = p["nu_octave"]
    fam = op.angular_family(j)
    sum_nu = sum(op.apply(f, mask=op.mask(j, nu)) for nu in range(len(fam)))
    err_nu = spatial_l2_norm(sum_nu - parts[j], op.sgrid) / spatial_l2_norm(parts[j], op.sgrid)
    jk, nu = p["k_piece"]
    sec = op.second_family(jk, 1.0)
    piece = op.apply(f, mask=op.mask(jk, nu))
    sum_k = sum(op.apply(f, mask=op.mask(jk, nu, k, 1.0)) for k in range(sec.count))
    err_k = spatial_l2_norm(sum_k - piece, op.sgrid) / spatial_l2_norm(piece, op.sgrid)
    rows = [{"level": "j", "relative_error": err_j}, {"level": "nu", "relative_error": err_nu},
            {"level": "k", "relative_error": err_k}]
    worst = max(err_j, err_nu, err_k)
    return Outcome("decomposition", worst <= p["bound"], {"max_error": worst}, rows)


def run_identity(cfg):
    p = cfg["params"]
    op = make_operator(cfg, flat_phase(), check_patches=False)
    lam = op.fgrid.radial_nodes
    f = np.exp(-0.5 * lam**2)[:, None] * np.ones(op.shape)
    x = op.sgrid.points
    exact = PLANCHEREL * np.exp(-0.5 * np.sum(x**2, axis=1))
    err = spatial_l2_norm(op.apply(f) - exact, op.sgrid) / spatial_l2_norm(exact, op.sgrid)
    return Outcome("identity", err <= p["bound"], {"relative_error": err},
                   [{"relative_error": err}])


def run_suite(cfg):
    which = cfg["params"]["criteria"] or sorted(ACCEPTANCE)
    rows = []
    for c in which:
        for out in run_criterion(int(c), seed=cfg["seed"]):
            rows.append({"criterion": int(c), "check": out.name, "passed": out.passed,
                         "summary": out.summary})
    return Outcome("suite", all(r["passed"] for r in rows),
                   {"failed": sorted({r["criterion"] for r in rows if not r["passed"]})}, rows)


_RUNNERS = {
    "check-assumptions": run_check_assumptions,
    "norm": run_norm,
    "ortho-freq": run_ortho_freq,
    "ortho-angle": run_ortho_angle,
    "diag": run_diag,
    "kernel-decay": run_kernel_decay,
    "schur": run_schur,
    "compare-sjnu": run_compare_sjnu,
    "solve": run_solve,
    "flat-roundtrip": run_flat_roundtrip,
    "evolve-flat": run_evolve_flat,
    "partition": run_partition,
    "decomposition": run_decomposition,
    "identity": run_identity,
    "suite": run_suite,
}


def run_command(cfg: dict) -> Outcome:
    """Execute the command of a resolved configuration."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _RUNNERS[cfg["command"]](cfg)


# ---------------------------------------------------------------------------
# acceptance battery
# ---------------------------------------------------------------------------


def _grid(j_min, j_max, rpo, n_omega, half_width, n):
    return {"frequency": {"j_min": j_min, "j_max": j_max, "radial_per_octave": rpo,
                          "angular_nodes": n_omega},
            "spatial": {"kind": "lattice", "half_width": half_width, "n": n}}


_FLAT = {"kind": "flat", "epsilon": 0.0, "preset": "default"}

ACCEPTANCE = {
    1: [{"command": "partition"}],
    2: [{"command": "decomposition", "grid": _grid(-3, 1, 8, 512, 3.0, 10)}],
    3: [{"command": "identity", "phase": _FLAT, "grid": _grid(-4, 2, 8, 1024, 4.0, 20)},
        {"command": "norm", "phase": _FLAT, "grid": _grid(-3, 1, 8, 1024, 3.0, 12)}],
    4: [{"command": "ortho-freq", "grid": _grid(-2, 3, 8, 2048, 2.5, 28)}],
    5: [{"command": "ortho-angle", "grid": _grid(-2, 2, 8, 2048, 3.0, 16)}],
    6: [{"command": "diag", "grid": _grid(-3, 1, 8, 1024, 4.5, 18)}],
    7: [{"command": "kernel-decay"}, {"command": "schur"}],
    8: [{"command": "norm", "grid": _grid(-3, 1, 8, 1024, 3.0, 12),
         "params": {"symbol": "lapse_inverse_minus_one", "epsilons": [0.01, 0.02, 0.04]}}],
    9: [{"command": "compare-sjnu", "phase": {"kind": "perturbed", "epsilon": 0.01},
         "grid": _grid(-3, 1, 8, 1024, 3.0, 12)}],
    10: [{"command": "flat-roundtrip", "phase": _FLAT, "grid": _grid(-6, 1, 8, 2048, 5.0, 16)},
         {"command": "solve", "grid": _grid(-6, 1, 8, 512, 5.0, 16)}],
    11: [{"command": "evolve-flat", "phase": _FLAT, "grid": _grid(-6, 1, 8, 2048, 5.0, 16)}],
}


def acceptance_configs(criterion: int, seed: int = 0) -> list[dict]:
    if criterion not in ACCEPTANCE:
        raise KeyError(f"no acceptance criterion {criterion}")
    return [resolve_config({**c, "seed": seed}) for c in ACCEPTANCE[criterion]]


def run_criterion(criterion: int, seed: int = 0) -> list[Outcome]:
    """Run every check of one acceptance criterion."""
    return [run_command(cfg) for cfg in acceptance_configs(criterion, seed)]
