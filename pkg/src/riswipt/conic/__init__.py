"""Conic backend: program IR, solve contract and engine selection.

Two engines implement the same contract: the pure-Python interior-point
method in `solver` (always available) and the compiled Clarabel solver when
installed.  The default engine is picked once at import -- compiled if
present, pure Python otherwise -- and can be forced through the
``RISWIPT_SOLVER`` environment variable (``native`` or ``clarabel``).
"""

from __future__ import annotations

import os

from ..errors import DomainError
from . import clarabel_backend
from .program import (INFEASIBLE, NUMERICAL_LIMIT, OPTIMAL, UNBOUNDED,
                      ConeDims, ConicProgram, ConicSolution, ProgramBuilder,
                      dump_triplets, embed_hermitian, quad_epigraph_soc, smat,
                      svec, svec_dim)
from .solver import solve_native

ENGINES = ("native", "clarabel")


def _pick_default() -> str:
    forced = os.environ.get("RISWIPT_SOLVER", "").strip().lower()
    if forced:
        if forced not in ENGINES:
            raise DomainError(f"RISWIPT_SOLVER must be one of {ENGINES}, got {forced!r}")
        if forced == "clarabel" and not clarabel_backend.AVAILABLE:
            raise DomainError("RISWIPT_SOLVER=clarabel but clarabel is not installed")
        return forced
    return "clarabel" if clarabel_backend.AVAILABLE else "native"


DEFAULT_ENGINE = _pick_default()


def _dispatch(prog, tol, engine, max_iter):
    if engine == "native":
        return solve_native(prog, tol=tol, max_iter=max_iter)
    if engine == "clarabel":
        return clarabel_backend.solve_clarabel(prog, tol=tol, max_iter=max_iter)
    raise DomainError(f"unknown engine {engine!r}")


def solve(prog: ConicProgram, tol: float = 1e-7, engine: str | None = None,
          max_iter: int = 200) -> ConicSolution:
    """Solve a conic program.

    With no engine forced, a solve that stalls short of the tolerance is
    retried on the other engine (the two rarely struggle on the same data)
    and the better outcome is returned.  Non-optimal outcomes are reported
    through the status field; only malformed input raises.
    """
    if engine is not None:
        return _dispatch(prog, tol, engine, max_iter)
    sol = _dispatch(prog, tol, DEFAULT_ENGINE, max_iter)
    if sol.status != NUMERICAL_LIMIT:
        return sol
    other = "native" if DEFAULT_ENGINE == "clarabel" else "clarabel"
    if other == "clarabel" and not clarabel_backend.AVAILABLE:
        return sol
    retry = _dispatch(prog, tol, other, max_iter)
    if retry.status == NUMERICAL_LIMIT and sol.x is not None:
        if retry.x is None or max(sol.pres, sol.dres) <= max(retry.pres, retry.dres):
            return sol
    return retry


__all__ = [
    "ConeDims", "ConicProgram", "ConicSolution", "ProgramBuilder",
    "DEFAULT_ENGINE", "ENGINES", "INFEASIBLE", "NUMERICAL_LIMIT", "OPTIMAL",
    "UNBOUNDED", "dump_triplets", "embed_hermitian", "quad_epigraph_soc",
    "smat", "solve", "solve_native", "svec", "svec_dim",
]
