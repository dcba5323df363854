"""Reference implementations of the hot kernels (pure Python).

These mirror the compiled extension (gmlbvp._ckernels) operation for
operation: identical residual grouping, LU pivoting, damping branches and
loop order, so that both lanes agree to the last bit on the same inputs.
Vectorization is deliberately avoided in the per-node Newton; clarity and
arithmetic parity with the C code win over speed here.  The public API in
solver.py / shooting.py wraps these.

A "system" is the pair (rhs, jac): rhs(u, t) -> ndarray, jac(u) -> ndarray
or None (finite differences on the rhs are used when jac is None).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import RhsEvaluationError, SweepError
from .newton import DEFAULT_FD_STEP, SINGULAR_PIVOT_RTOL

# outer_run status codes (shared with the compiled lane)
STATUS_CONVERGED = 0
STATUS_MAX_OUTER = 1
STATUS_ENDPOINT_FAIL = 2
STATUS_SWEEP_FAIL = 3
STATUS_DIVERGED = 4
STATUS_RHS_FAIL = 5

DIVERGENCE_GUARD = 1e6


def _rhs_at(rhs, v, t, node):
    """Evaluate rhs with node context attached to any failure."""
    try:
        f = np.asarray(rhs(v, t), dtype=float)
    except RhsEvaluationError as exc:
        if exc.node is None:
            raise type(exc)(str(exc), node=node) from exc
        raise
    except Exception as exc:
        raise RhsEvaluationError(f"rhs evaluation failed: {exc}", node=node) from exc
    if not np.all(np.isfinite(f)):
        raise RhsEvaluationError("rhs returned a non-finite value", node=node)
    return f


def _lu_inplace(A, b, x):
    """Solve A x = b in place (partial pivoting). Returns False when singular."""
    n = A.shape[0]
    norm = 0.0
    for r in range(n):
        s = 0.0
        for c in range(n):
            s += abs(A[r, c])
        if s > norm:
            norm = s
    if norm == 0.0:
        return False
    threshold = SINGULAR_PIVOT_RTOL * norm
    for col in range(n):
        p = col
        mx = abs(A[col, col])
        for r in range(col + 1, n):
            a = abs(A[r, col])
            if a > mx:
                mx = a
                p = r
        if mx < threshold:
            return False
        if p != col:
            for c in range(n):
                A[col, c], A[p, c] = A[p, c], A[col, c]
            b[col], b[p] = b[p], b[col]
        for r in range(col + 1, n):
            m = A[r, col] / A[col, col]
            A[r, col] = m
            if m != 0.0:
                for c in range(col + 1, n):
                    A[r, c] -= m * A[col, c]
                b[r] -= m * b[col]
    for r in range(n - 1, -1, -1):
        s = b[r]
        for c in range(r + 1, n):
            s -= A[r, c] * x[c]
        x[r] = s / A[r, r]
    return True


def _f_jacobian(rhs, jac, v, t, node):
    """Jacobian of the rhs at v: analytic when available, else forward FD."""
    n = v.shape[0]
    if jac is not None:
        J = np.asarray(jac(v), dtype=float)
        if J.shape != (n, n):
            raise RhsEvaluationError(
                f"jacobian returned shape {J.shape}, expected {(n, n)}", node=node)
        return J
    f0 = _rhs_at(rhs, v, t, node)
    J = np.empty((n, n))
    for i in range(n):
        h = DEFAULT_FD_STEP * max(1.0, abs(v[i]))
        vp = v.copy()
        vp[i] += h
        fi = _rhs_at(rhs, vp, t, node)
        for j in range(n):
            J[j, i] = (fi[j] - f0[j]) / h
    return J


def step_residual(u_prev, u_next, tilde_prev, tilde_next, f_prev, d_over_k, relax_k, out):
    """Backward-step residual, grouped to avoid large-scale cancellation:
    ((u_next - u_prev) - dtilde) + dtilde/K - f(u_prev)*d/K   (per component).
    """
    n = out.shape[0]
    for j in range(n):
        dt = tilde_next[j] - tilde_prev[j]
        out[j] = ((u_next[j] - u_prev[j]) - dt) + dt / relax_k - f_prev[j] * d_over_k
    return out


def sweep(rhs, jac, u_end, tilde, d, relax_k, newton_tol, newton_max_iter,
          max_halvings):
    """Backward node sweep: solve each step equation for the earlier node.

    Returns the (N+1) x n value array with node 0 holding the RAW swept state
    (the caller overwrites its fixed components).  Newton at node k is
    warm-started from u_k; failure raises SweepError with the node index.
    """
    n_nodes = tilde.shape[0] - 1
    n = tilde.shape[1]
    d_over_k = d / relax_k
    u = np.empty_like(tilde)
    u[n_nodes, :] = u_end
    g = np.empty(n)
    J = np.empty((n, n))
    delta = np.empty(n)
    for k in range(n_nodes, 0, -1):
        t_prev = (k - 1) * d
        u_next = u[k]
        v = u_next.copy()
        f_prev = _rhs_at(rhs, v, t_prev, k - 1)
        step_residual(v, u_next, tilde[k - 1], tilde[k], f_prev, d_over_k, relax_k, g)
        res = 0.0
        for j in range(n):
            a = abs(g[j])
            if a > res:
                res = a
        iters = 0
        while res > newton_tol and iters < newton_max_iter:
            Jf = _f_jacobian(rhs, jac, v, t_prev, k - 1)
            for r in range(n):
                for c in range(n):
                    J[r, c] = -Jf[r, c] * d_over_k
                J[r, r] -= 1.0
            if not _lu_inplace(J, g.copy(), delta):
                raise SweepError("singular Jacobian in sweep Newton", node=k - 1)
            scale = 1.0
            v_try = v
            res_try = math.inf
            for _ in range(max_halvings + 1):
                v_try = v - scale * delta
                try:
                    f_try = _rhs_at(rhs, v_try, t_prev, k - 1)
                except RhsEvaluationError:
                    res_try = math.inf
                    scale *= 0.5
                    continue
                step_residual(v_try, u_next, tilde[k - 1], tilde[k], f_try,
                              d_over_k, relax_k, g)
                res_try = 0.0
                finite = True
                for j in range(n):
                    a = abs(g[j])
                    if a != a:
                        finite = False
                        break
                    if a > res_try:
                        res_try = a
                if not finite:
                    res_try = math.inf
                if res_try < res or res_try <= newton_tol or max_halvings == 0:
                    break
                scale *= 0.5
            if not math.isfinite(res_try):
                raise SweepError("non-finite residual in sweep Newton", node=k - 1)
            v = v_try
            res = res_try
            iters += 1
        if res > newton_tol:
            raise SweepError(
                f"sweep Newton did not reach tol {newton_tol:g} "
                f"(residual {res:.3e} after {iters} iterations)", node=k - 1)
        u[k - 1, :] = v
    return u


def endpoint_correction(rhs, tilde, d, relax_k):
    """Error-term estimate on the previous iterate:
    E_j = sum_{m=1..N} m * (f_j(tilde_{m-1}) - f_j(tilde_m)) * d/K."""
    n_nodes = tilde.shape[0] - 1
    n = tilde.shape[1]
    d_over_k = d / relax_k
    E = np.zeros(n)
    f_prev = _rhs_at(rhs, tilde[0], 0.0, 0)
    for m in range(1, n_nodes + 1):
        f_cur = _rhs_at(rhs, tilde[m], m * d, m)
        for j in range(n):
            E[j] += m * (f_prev[j] - f_cur[j]) * d_over_k
        f_prev = f_cur
    return E


def endpoint_residual_kernel(u0, uN, tilde, tf_over_k, relax_k, fN, E, out):
    """Endpoint residual per component, same grouping as step_residual."""
    n = out.shape[0]
    n_nodes = tilde.shape[0] - 1
    for j in range(n):
        dT = tilde[n_nodes, j] - tilde[0, j]
        out[j] = ((uN[j] - u0[j]) - dT) + dT / relax_k - fN[j] * tf_over_k - E[j]
    return out


def endpoint_solve(rhs, jac, tilde, d, relax_k, free0, fixed0_idx, fixed0_val,
                   unkN, fixedN_idx, fixedN_val, E, newton_tol, newton_max_iter,
                   max_halvings):
    """Damped Newton on the endpoint system over (free start, unknown end).

    Returns (u0, uN, iterations, converged, residual_norm); the caller decides
    how to surface non-convergence.
    """
    n_nodes = tilde.shape[0] - 1
    n = tilde.shape[1]
    t_end = n_nodes * d
    tf_over_k = (n_nodes * d) / relax_k
    nf = len(free0)
    nz = nf + len(unkN)
    u0 = np.empty(n)
    uN = np.empty(n)
    for i in range(len(fixed0_idx)):
        u0[fixed0_idx[i]] = fixed0_val[i]
    for i in range(len(fixedN_idx)):
        uN[fixedN_idx[i]] = fixedN_val[i]
    z = np.empty(nz)
    for i in range(nf):
        z[i] = tilde[0, free0[i]]
    for i in range(len(unkN)):
        z[nf + i] = tilde[n_nodes, unkN[i]]

    def assemble(zv):
        for i in range(nf):
            u0[free0[i]] = zv[i]
        for i in range(len(unkN)):
            uN[unkN[i]] = zv[nf + i]

    r = np.empty(n)
    Jz = np.empty((n, nz))
    delta = np.empty(nz)

    assemble(z)
    fN = _rhs_at(rhs, uN, t_end, n_nodes)
    endpoint_residual_kernel(u0, uN, tilde, tf_over_k, relax_k, fN, E, r)
    res = float(np.max(np.abs(r))) if n else 0.0
    iters = 0
    while res > newton_tol and iters < newton_max_iter:
        Jf = _f_jacobian(rhs, jac, uN, t_end, n_nodes)
        for j in range(n):
            for i in range(nf):
                Jz[j, i] = -1.0 if free0[i] == j else 0.0
            for i in range(len(unkN)):
                c = unkN[i]
                Jz[j, nf + i] = (1.0 if c == j else 0.0) - Jf[j, c] * tf_over_k
        if not _lu_inplace(Jz.copy(), r.copy(), delta):
            return u0, uN, iters, False, res
        scale = 1.0
        res_try = math.inf
        z_try = z
        for _ in range(max_halvings + 1):
            z_try = z - scale * delta
            assemble(z_try)
            try:
                fN = _rhs_at(rhs, uN, t_end, n_nodes)
            except RhsEvaluationError:
                res_try = math.inf
                scale *= 0.5
                continue
            endpoint_residual_kernel(u0, uN, tilde, tf_over_k, relax_k, fN, E, r)
            res_try = float(np.max(np.abs(r)))
            if not math.isfinite(res_try):
                res_try = math.inf
            if res_try < res or res_try <= newton_tol or max_halvings == 0:
                break
            scale *= 0.5
        if not math.isfinite(res_try):
            assemble(z)
            return u0, uN, iters, False, res
        z = z_try
        res = res_try
        iters += 1
    assemble(z)
    return u0, uN, iters, res <= newton_tol, res


def telescoping_max(rhs, u, tilde, d, relax_k):
    """Max violation of the telescoped identity over all nodes and components.

    E_k accumulates through the recursion E_k = E_{k-1} + k*(f(u_{k-1}) -
    f(u_k))*d/K, which is the weight-m closed form.
    """
    n_nodes = u.shape[0] - 1
    n = u.shape[1]
    d_over_k = d / relax_k
    E = np.zeros(n)
    f_prev = _rhs_at(rhs, u[0], 0.0, 0)
    worst = 0.0
    for k in range(1, n_nodes + 1):
        f_cur = _rhs_at(rhs, u[k], k * d, k)
        kd_over_k = (k * d) / relax_k
        for j in range(n):
            E[j] += k * (f_prev[j] - f_cur[j]) * d_over_k
            dT = tilde[k, j] - tilde[0, j]
            viol = abs(((u[k, j] - u[0, j]) - dT) + dT / relax_k
                       - f_cur[j] * kd_over_k - E[j])
            if viol > worst:
                worst = viol
        f_prev = f_cur
    return worst


def euler_defect(rhs, u, d):
    """max_{k,j} |u_k - u_{k-1} - f(u_{k-1})*d| (explicit-Euler residual)."""
    n_nodes = u.shape[0] - 1
    n = u.shape[1]
    worst = 0.0
    for k in range(1, n_nodes + 1):
        f = _rhs_at(rhs, u[k - 1], (k - 1) * d, k - 1)
        for j in range(n):
            viol = abs(u[k, j] - u[k - 1, j] - f[j] * d)
            if viol > worst:
                worst = viol
    return worst


def euler_path(rhs, u0, d, n_steps):
    """Explicit Euler: u_k = u_{k-1} + f(u_{k-1})*d."""
    n = u0.shape[0]
    u = np.empty((n_steps + 1, n))
    u[0, :] = u0
    for k in range(1, n_steps + 1):
        f = _rhs_at(rhs, u[k - 1], (k - 1) * d, k - 1)
        for j in range(n):
            u[k, j] = u[k - 1, j] + f[j] * d
    return u


def rk4_path(rhs, u0, d, n_steps):
    """Classical four-stage Runge-Kutta."""
    n = u0.shape[0]
    u = np.empty((n_steps + 1, n))
    u[0, :] = u0
    tmp = np.empty(n)
    for k in range(1, n_steps + 1):
        t = (k - 1) * d
        uk = u[k - 1]
        k1 = _rhs_at(rhs, uk, t, k - 1)
        for j in range(n):
            tmp[j] = uk[j] + 0.5 * d * k1[j]
        k2 = _rhs_at(rhs, tmp, t + 0.5 * d, k - 1)
        for j in range(n):
            tmp[j] = uk[j] + 0.5 * d * k2[j]
        k3 = _rhs_at(rhs, tmp, t + 0.5 * d, k - 1)
        for j in range(n):
            tmp[j] = uk[j] + d * k3[j]
        k4 = _rhs_at(rhs, tmp, t + d, k - 1)
        for j in range(n):
            u[k, j] = uk[j] + (d / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return u


def outer_run(rhs, jac, guess, d, relax_k, free0, fixed0_idx, fixed0_val,
              unkN, fixedN_idx, fixedN_val, outer_tol, max_outer, newton_tol,
              newton_max_iter, max_halvings, correction_on, collect_diagnostics):
    """Full outer iteration: {endpoint solve; backward sweep; overwrite node 0;
    measure update norm; swap}.

    Returns (values, status, update_history, discrepancy_history,
    telescoping_history, context) where context carries failure details
    (endpoint unknown vector / sweep node).
    """
    n = guess.shape[1]
    tilde = guess.copy()
    update_history = []
    discrepancy_history = []
    telescoping_history = []
    E = np.zeros(n)
    status = STATUS_MAX_OUTER
    context = {}
    for _ in range(max_outer):
        try:
            if correction_on:
                E = endpoint_correction(rhs, tilde, d, relax_k)
            u0e, uNe, e_iters, e_ok, e_res = endpoint_solve(
                rhs, jac, tilde, d, relax_k, free0, fixed0_idx, fixed0_val,
                unkN, fixedN_idx, fixedN_val, E, newton_tol, newton_max_iter,
                max_halvings)
        except RhsEvaluationError as exc:
            status = STATUS_RHS_FAIL
            context = {"rhs_node": exc.node, "rhs_error": str(exc)}
            break
        if not e_ok:
            status = STATUS_ENDPOINT_FAIL
            context = {"endpoint_unknowns": np.concatenate(
                [u0e[list(free0)], uNe[list(unkN)]]) if (len(free0) or len(unkN))
                else np.empty(0), "endpoint_residual": e_res}
            break
        try:
            u = sweep(rhs, jac, uNe, tilde, d, relax_k, newton_tol,
                      newton_max_iter, max_halvings)
            if collect_diagnostics:
                telescoping_history.append(telescoping_max(rhs, u, tilde, d, relax_k))
        except SweepError as exc:
            status = STATUS_SWEEP_FAIL
            context = {"sweep_node": exc.node, "sweep_error": str(exc)}
            break
        except RhsEvaluationError as exc:
            status = STATUS_RHS_FAIL
            context = {"rhs_node": exc.node, "rhs_error": str(exc)}
            break
        disc = 0.0
        for j in range(n):
            a = abs(u[0, j] - u0e[j])
            if a > disc:
                disc = a
        discrepancy_history.append(disc)
        for i in range(len(fixed0_idx)):
            u[0, fixed0_idx[i]] = fixed0_val[i]
        upd = 0.0
        n_rows = u.shape[0]
        for k in range(n_rows):
            for j in range(n):
                rel = abs(u[k, j] - tilde[k, j]) / (1.0 + abs(u[k, j]))
                if rel > upd:
                    upd = rel
        update_history.append(upd)
        tilde, u = u, tilde
        if upd <= outer_tol:
            status = STATUS_CONVERGED
            break
        if upd > DIVERGENCE_GUARD:
            status = STATUS_DIVERGED
            break
    return tilde, status, update_history, discrepancy_history, telescoping_history, context
