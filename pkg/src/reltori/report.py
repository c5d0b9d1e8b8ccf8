"""Deterministic JSON and CSV serialization of pipeline results."""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from . import groups as gc
from .freqs import ExactScalar, RelationLattice
from .reconstruct import Reconstruction
from .verify import Trajectory, VerificationReport

FLOAT_DIGITS = 13
SCHEMA_VERSION = 1


def _float(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    y = float(f"{x:.{FLOAT_DIGITS - 1}e}")
    return 0.0 if y == 0 else y


def jsonable(obj):
    """Plain JSON data with floats rounded to FLOAT_DIGITS significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, ExactScalar):
        return {"coeffs": [str(c) for c in obj.coeffs], "value": _float(float(obj))}
    if isinstance(obj, gc.GroupElement):
        return [jsonable(x) for x in obj.payload]
    if isinstance(obj, gc.AlgebraVector):
        return [jsonable(x) for x in obj.array]
    if isinstance(obj, gc.TorusDescriptor):
        return {"kind": obj.kind, "dim": obj.dim,
                "basis": [jsonable(b) for b in obj.basis],
                "axis": jsonable(obj.axis)}
    if isinstance(obj, RelationLattice):
        return {"basis": [list(map(int, v)) for v in obj], "rank": obj.rank, "heuristic": obj.heuristic}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def reconstruction_dict(recon: Reconstruction) -> dict:
    pd, t1, t2, spec = recon.phase_data, recon.t1, recon.t2, recon.spec
    declared = {s.direction for s in spec.lifts}
    snf = None
    if t2.snf is not None:
        snf = {"U": t2.snf.U, "D": t2.snf.D, "V": t2.snf.V}
    return {
        "choices": {
            "base_point": {"phi": pd.base_point.phi, "g": pd.base_point.g},
            "log_branch": "principal, T2 coordinates in [-1/2, 1/2)",
            "lifts_declared": sorted(d + 1 for d in declared),
            "lift_completed": [s.direction + 1 for s in pd.lifts if s.direction not in declared],
            "mode": recon.mode,
            "height_bound": recon.height_bound,
            "tol": recon.tol,
            "step": pd.step,
        },
        "notes": list(recon.notes),
        "phase_data": {
            "phases": pd.phases,
            "T2": pd.torus,
            "logs": pd.logs,
            "H": pd.H,
            "branch": pd.branch,
            "exact_external": pd.exact_nu2,
            "exact_note": pd.exact_note,
        },
        "theorem1": {
            "nu": t1.nu,
            "d1": t1.d1,
            "T1": t1.T1,
            "T1_in_T2": t1.T1_in_T2,
            "relations_of_T2_frequencies": t1.nu2_relations,
            "base_label": t1.base_label,
            "exact": t1.exact,
            "heuristic": t1.heuristic,
            "omega_eta_residual": t1.omega_eta_residual,
        },
        "theorem2": {
            "l": t2.l,
            "resonance_lattice": t2.lattice,
            "p": t2.p,
            "r_factors": t2.r_factors,
            "r": t2.r,
            "snf": snf,
            "xi_prime": t2.xi_prime,
            "nu_prime": t2.nu_prime,
            "nu_pp": t2.nu_pp,
            "d0": t2.d0,
            "T0": t2.T0,
            "omega_prime": t2.omega_prime,
            "delta": t2.delta,
            "eta_prime": t2.eta_prime,
            "K": t2.K,
            "K_generators": t2.K_generators,
            "K_order": t2.K_order,
            "F0_order": t2.F0_order,
            "F0_factors": t2.F0_factors,
            "covering_degree": t2.covering_degree,
            "torus_dimension": spec.k + t2.d0,
            "base_label": t2.base_label,
            "exact": t2.exact,
            "heuristic": t2.heuristic,
            "resonance_residuals": t2.resonance_residuals,
            "reduced_nonresonant": t2.reduced_nonresonant,
        },
    }


def verification_dict(rep: VerificationReport) -> dict:
    out = {
        "passed": rep.passed,
        "heuristic": rep.heuristic,
        "tolerances": rep.tolerances.as_dict(),
        "checks": [
            {"name": r.name, "residual": r.residual, "tolerance": r.tolerance,
             "passed": r.passed, "samples": r.samples, "note": r.note}
            for r in rep.rows
        ],
    }
    if rep.frequencies is not None:
        out["frequencies"] = {
            "labels": rep.frequencies.labels,
            "extracted": rep.frequencies.slopes,
            "fit_residuals": rep.frequencies.residuals,
            "predicted": rep.predicted,
        }
    return out


def trajectory_csv(traj: Trajectory) -> str:
    """Header row then one line per sample; every number with 15 significant digits."""
    k = traj.phi.shape[1]
    cols = ["t"] + [f"phi{i + 1}" for i in range(k)]
    if traj.group.kind == "so3":
        cols += ["qw", "qx", "qy", "qz"]
    else:
        cols += [f"g{i + 1}" for i in range(traj.group.dim)]
    lines = [",".join(cols)]
    data = np.column_stack([traj.times, traj.phi, traj.payload])
    for row in data:
        lines.append(",".join(f"{x:.14e}" for x in row))
    return "\n".join(lines) + "\n"
