"""Adapter from the conic contract onto the compiled Clarabel solver.

Clarabel's scaled-triangle PSD convention matches this package's svec layout,
so the mapping is a direct translation.  Residuals are recomputed here from
the returned primal/dual point with the same normalization the native engine
uses; a solve that does not meet the requested tolerance is downgraded to
``numerical_limit`` rather than reported optimal.
"""

from __future__ import annotations

import numpy as np

from .program import (INFEASIBLE, NUMERICAL_LIMIT, OPTIMAL, UNBOUNDED,
                      ConicProgram, ConicSolution)

try:
    import clarabel
    from scipy import sparse
    AVAILABLE = True
except ImportError:  # pragma: no cover - exercised on minimal installs
    AVAILABLE = False


def _cones(dims):
    out = []
    if dims.zero:
        out.append(clarabel.ZeroConeT(dims.zero))
    if dims.nonneg:
        out.append(clarabel.NonnegativeConeT(dims.nonneg))
    for q in dims.soc:
        out.append(clarabel.SecondOrderConeT(q))
    for p in dims.psd:
        out.append(clarabel.PSDTriangleConeT(p))
    return out


def solve_clarabel(prog: ConicProgram, tol: float = 1e-7,
                   max_iter: int = 200) -> ConicSolution:
    if not AVAILABLE:  # pragma: no cover
        raise RuntimeError("clarabel is not installed")
    n = prog.n_vars
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    inner = max(tol * 1e-2, 1e-10)
    settings.tol_gap_abs = inner
    settings.tol_gap_rel = inner
    settings.tol_feas = inner
    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((n, n)),
        prog.c,
        sparse.csc_matrix(prog.A),
        prog.b,
        _cones(prog.cones),
        settings,
    )
    result = solver.solve()
    name = str(result.status)
    iterations = int(getattr(result, "iterations", 0))

    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution(status=INFEASIBLE, x=None, objective=np.nan,
                             pres=np.inf, dres=np.inf, gap=np.inf,
                             iterations=iterations)
    if name in ("DualInfeasible", "AlmostDualInfeasible"):
        return ConicSolution(status=UNBOUNDED, x=None, objective=np.nan,
                             pres=np.inf, dres=np.inf, gap=np.inf,
                             iterations=iterations)

    x = np.asarray(result.x, dtype=float)
    z = np.asarray(result.z, dtype=float)
    s = np.asarray(result.s, dtype=float)
    if x.size != n or not np.all(np.isfinite(x)):
        return ConicSolution(status=NUMERICAL_LIMIT, x=None, objective=np.nan,
                             pres=np.inf, dres=np.inf, gap=np.inf,
                             iterations=iterations)
    # residuals measured against the contract's tol * (1 + ||data||) allowance
    data_scale = 1.0 + max(float(np.abs(prog.A).max(initial=0.0)),
                           float(np.abs(prog.b).max(initial=0.0)),
                           float(np.abs(prog.c).max(initial=0.0)))
    pres = float(np.linalg.norm(prog.A @ x + s - prog.b)) / data_scale
    dres = float(np.linalg.norm(prog.A.T @ z + prog.c)) / data_scale
    objective = float(prog.c @ x)
    gap = abs(float(s @ z))
    relgap = gap / max(1.0, abs(objective))
    status = OPTIMAL if (pres <= tol and dres <= tol
                         and relgap <= max(tol, 1e-6)) else NUMERICAL_LIMIT
    return ConicSolution(status=status, x=x, objective=objective, pres=pres,
                         dres=dres, gap=gap, iterations=iterations)
