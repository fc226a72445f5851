"""Congestion games with tolls, subsidies and heterogeneous price sensitivities."""

import json

from . import _core
from ._core import (
    ConvergenceError,
    prop1_subsidy,
    prop1_toll,
    prop2_nes,
    prop2_nes_q,
    prop2_smc,
    prop3,
    prop4,
    thm5_crossover,
    verify,
)

__all__ = [
    "ConvergenceError",
    "analyze",
    "atomic_lp",
    "cli",
    "fig1_instance",
    "parallel_affine_instance",
    "pigou_instance",
    "prop1_subsidy",
    "prop1_toll",
    "prop2_nes",
    "prop2_nes_q",
    "prop2_smc",
    "prop3",
    "prop4",
    "sweep",
    "thm5_crossover",
    "verify",
]


def fig1_instance():
    return json.loads(_core.fig1_instance())


def pigou_instance(p, demand=1.0):
    return json.loads(_core.pigou_instance(p, demand))


def parallel_affine_instance(a, b, rate=1.0):
    """Returns (problem, fully_utilized)."""
    text, full = _core.parallel_affine_instance(list(a), list(b), rate)
    return json.loads(text), full


def analyze(problem, mechanism=None, s_low=1.0, s_high=1.0, od_sensitivity=None, seed=0, jobs=1,
            restarts=8, profile_grid=51):
    """PoA report for a problem dict under a mechanism dict such as {"kind": "mc"}.

    Equal s_low and s_high mean homogeneous users; otherwise extremal
    two-class profiles are searched. od_sensitivity fixes one value per OD.
    """
    mechanism = mechanism if mechanism is not None else {"kind": "none"}
    text = _core.analyze(json.dumps(problem), json.dumps(mechanism), s_low, s_high,
                         None if od_sensitivity is None else list(od_sensitivity), seed, jobs, restarts,
                         profile_grid)
    return json.loads(text)


def sweep(preset, points=101, empirical=False, jobs=1):
    """Rows of a fig3/fig4/fig5 preset sweep as dicts (empty cells become None)."""
    lines = _core.sweep_csv(preset, points, empirical, jobs).strip().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = {}
        for key, cell in zip(header, line.split(",")):
            if key == "instance_id":
                row[key] = cell or None
            else:
                row[key] = float(cell) if cell else None
        rows.append(row)
    return rows


def atomic_lp(degree, n, beta=None, sign="toll"):
    return json.loads(_core.atomic_lp(degree, n, beta, sign))


def cli(*args):
    """Runs the command-line interface in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
