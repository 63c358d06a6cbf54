"""Independent brute-force oracles shared by the unit and acceptance tests."""

import numpy as np


def scalar_ni_grid_minimum(g, alpha=1.0, w=1.0, p_max=1e3, n_p=400, n_q=401, refinements=8):
    """Dense grid-search minimum of the scalar NI program.

    minimize w^2 (g p - q)^2 over the PSD set
    [[p - alpha, q], [q, p]] >= 0, i.e. p >= alpha and p (p - alpha) >= q^2.

    Log-spaced p grid up to ``p_max`` times a linear q grid, then iterative
    zooming around the best cell.  Purely evaluative; no calculus and no
    knowledge of the solver.
    """

    def best_on(p_lo, p_hi, q_lo, q_hi, log_p):
        if log_p:
            ps = np.geomspace(max(p_lo, alpha), max(p_hi, alpha * (1 + 1e-12)), n_p)
        else:
            ps = np.linspace(max(p_lo, alpha), max(p_hi, alpha), n_p)
        best = (np.inf, ps[0], 0.0)
        for p in ps:
            det_bound = p * (p - alpha)
            if det_bound < 0:
                continue
            q_cap = np.sqrt(det_bound)
            qs = np.linspace(max(q_lo, -q_cap), min(q_hi, q_cap), n_q)
            if qs.size == 0:
                continue
            vals = (w * (g * p - qs)) ** 2
            k = int(np.argmin(vals))
            if vals[k] < best[0]:
                best = (float(vals[k]), float(p), float(qs[k]))
        return best

    val, p, q = best_on(alpha, p_max, -p_max, p_max, log_p=True)
    span_p = p_max
    for _ in range(refinements):
        span_p = max(span_p / 8.0, 1e-12)
        dp = span_p
        dq = max(abs(q), 1.0) / 4.0
        cand = best_on(p - dp, p + dp, q - dq, q + dq, log_p=False)
        if cand[0] <= val:
            val, p, q = cand
    return val, p, q
