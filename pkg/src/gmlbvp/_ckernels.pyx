# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels.

Operation-for-operation mirror of gmlbvp._pykernels (same residual grouping,
LU pivoting, damping branches and loop order), driving the rhs through a
registered-system dispatch instead of Python callables.  Every entry point
returns an error code + node instead of raising; gmlbvp.engine translates.

System ids: 0 zero, 1 scalar-linear(rate, offset), 2 harmonic oscillator,
3 flight model (mass, wing_area, angle_of_attack, thrust_offset, gravity,
cd0, k1, k2, cl_alpha, thrust).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, isfinite, pow, sin

cnp.import_array()

# error codes for single-shot kernels
ERR_RHS = 1
ERR_SWEEP = 2

# outer_run status codes (must match _pykernels)
STATUS_CONVERGED = 0
STATUS_MAX_OUTER = 1
STATUS_ENDPOINT_FAIL = 2
STATUS_SWEEP_FAIL = 3
STATUS_DIVERGED = 4
STATUS_RHS_FAIL = 5

cdef double SINGULAR_PIVOT_RTOL = 1e-14
cdef double DIVERGENCE_GUARD = 1e6
cdef double SPEED_FLOOR = 1e-6

cdef int SID_ZERO = 0
cdef int SID_SCALAR_LINEAR = 1
cdef int SID_OSCILLATOR = 2
cdef int SID_FLIGHT = 3

cdef int C_ERR_RHS = 1
cdef int C_ERR_SWEEP = 2


cdef int c_rhs(int sid, const double* p, int n, double t, const double* u,
               double* out) noexcept nogil:
    """Evaluate the registered rhs. Returns 0, or 1 on a domain/finiteness failure."""
    cdef double h, gamma, v, base, rho, q_area, cl, cd, lift, dragf
    cdef double sin_g, cos_g, thrust_angle
    cdef int j
    if sid == SID_ZERO:
        for j in range(n):
            out[j] = 0.0
        return 0
    if sid == SID_SCALAR_LINEAR:
        out[0] = p[0] * u[0] + p[1]
        return 0
    if sid == SID_OSCILLATOR:
        out[0] = u[1]
        out[1] = -u[0]
        return 0
    if sid == SID_FLIGHT:
        h = u[0]
        gamma = u[1]
        v = u[2]
        if v < SPEED_FLOOR:
            return 1
        base = 1.0 - 0.0065 * h / 288.15
        if base <= 0.0:
            return 1
        rho = 1.225 * pow(base, 4.225)
        q_area = 0.5 * rho * v * v * p[1]
        cl = p[8] * p[2]
        cd = p[5] + p[6] * cl + p[7] * cl * cl
        lift = q_area * cl
        dragf = q_area * cd
        sin_g = sin(gamma)
        cos_g = cos(gamma)
        thrust_angle = p[2] + p[3]
        out[0] = v * sin_g
        out[1] = (p[9] * sin(thrust_angle) + lift) / (p[0] * v) - (p[4] / v) * cos_g
        out[2] = (p[9] * cos(thrust_angle) - dragf) / p[0] - p[4] * sin_g
        out[3] = v * cos_g
        for j in range(4):
            if not isfinite(out[j]):
                return 1
        return 0
    return 1


cdef int c_jac(int sid, const double* p, int n, double t, const double* u,
               double* J) noexcept nogil:
    """Analytic Jacobian of the registered rhs (row-major n*n)."""
    cdef double h, gamma, v, base, rho, drho, cl, cd, s, m, g, f
    cdef double sin_g, cos_g, sin_t, lift
    cdef int i
    for i in range(n * n):
        J[i] = 0.0
    if sid == SID_ZERO:
        return 0
    if sid == SID_SCALAR_LINEAR:
        J[0] = p[0]
        return 0
    if sid == SID_OSCILLATOR:
        J[0 * 2 + 1] = 1.0
        J[1 * 2 + 0] = -1.0
        return 0
    if sid == SID_FLIGHT:
        h = u[0]
        gamma = u[1]
        v = u[2]
        if v < SPEED_FLOOR:
            return 1
        base = 1.0 - 0.0065 * h / 288.15
        if base <= 0.0:
            return 1
        rho = 1.225 * pow(base, 4.225)
        drho = 1.225 * 4.225 * pow(base, 3.225) * (-0.0065 / 288.15)
        cl = p[8] * p[2]
        cd = p[5] + p[6] * cl + p[7] * cl * cl
        s = p[1]
        m = p[0]
        g = p[4]
        f = p[9]
        sin_g = sin(gamma)
        cos_g = cos(gamma)
        sin_t = sin(p[2] + p[3])
        lift = 0.5 * rho * v * v * s * cl
        J[0 * 4 + 1] = v * cos_g
        J[0 * 4 + 2] = sin_g
        J[1 * 4 + 0] = (0.5 * drho * v * v * s * cl) / (m * v)
        J[1 * 4 + 1] = (g / v) * sin_g
        J[1 * 4 + 2] = (0.5 * rho * s * cl) / m - (f * sin_t + lift) / (m * v * v) \
            + (g / (v * v)) * cos_g
        J[2 * 4 + 0] = -(0.5 * drho * v * v * s * cd) / m
        J[2 * 4 + 1] = -g * cos_g
        J[2 * 4 + 2] = -(rho * v * s * cd) / m
        J[3 * 4 + 1] = -v * sin_g
        J[3 * 4 + 2] = cos_g
        for i in range(16):
            if not isfinite(J[i]):
                return 1
        return 0
    return 1


cdef bint c_lu(int n, double* A, double* b, double* x) noexcept nogil:
    """Solve A x = b in place (row-major A). False when singular."""
    cdef double norm = 0.0, srow, mx, a, mfac, tmp
    cdef double threshold
    cdef int r, c, col, piv
    for r in range(n):
        srow = 0.0
        for c in range(n):
            srow += fabs(A[r * n + c])
        if srow > norm:
            norm = srow
    if norm == 0.0:
        return False
    threshold = SINGULAR_PIVOT_RTOL * norm
    for col in range(n):
        piv = col
        mx = fabs(A[col * n + col])
        for r in range(col + 1, n):
            a = fabs(A[r * n + col])
            if a > mx:
                mx = a
                piv = r
        if mx < threshold:
            return False
        if piv != col:
            for c in range(n):
                tmp = A[col * n + c]
                A[col * n + c] = A[piv * n + c]
                A[piv * n + c] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for r in range(col + 1, n):
            mfac = A[r * n + col] / A[col * n + col]
            A[r * n + col] = mfac
            if mfac != 0.0:
                for c in range(col + 1, n):
                    A[r * n + c] -= mfac * A[col * n + c]
                b[r] -= mfac * b[col]
    for r in range(n - 1, -1, -1):
        srow = b[r]
        for c in range(r + 1, n):
            srow -= A[r * n + c] * x[c]
        x[r] = srow / A[r * n + r]
    return True


cdef inline void c_step_residual(int n, const double* u_prev, const double* u_next,
                                 const double* tilde_prev, const double* tilde_next,
                                 const double* f_prev, double d_over_k,
                                 double relax_k, double* out) noexcept nogil:
    cdef int j
    cdef double dt
    for j in range(n):
        dt = tilde_next[j] - tilde_prev[j]
        out[j] = ((u_next[j] - u_prev[j]) - dt) + dt / relax_k - f_prev[j] * d_over_k


cdef int c_sweep(int sid, const double* p, int n, int n_nodes, double* u,
                 const double* tilde, double d, double relax_k,
                 double newton_tol, int newton_max_iter, int max_halvings,
                 double* g, double* J, double* Jf, double* delta, double* b,
                 double* v, double* v_try, double* f,
                 Py_ssize_t* err_node) noexcept nogil:
    """Backward sweep; u[n_nodes] must hold the end state on entry.
    Fills u down to the raw node 0. Returns 0 / C_ERR_RHS / C_ERR_SWEEP."""
    cdef double d_over_k = d / relax_k
    cdef double t_prev, res, res_try, a, scale
    cdef int k, j, r, c, iters, halve
    cdef bint finite
    for k in range(n_nodes, 0, -1):
        t_prev = (k - 1) * d
        for j in range(n):
            v[j] = u[k * n + j]
        if c_rhs(sid, p, n, t_prev, v, f):
            err_node[0] = k - 1
            return C_ERR_RHS
        c_step_residual(n, v, &u[k * n], &tilde[(k - 1) * n], &tilde[k * n],
                        f, d_over_k, relax_k, g)
        res = 0.0
        for j in range(n):
            a = fabs(g[j])
            if a > res:
                res = a
        iters = 0
        while res > newton_tol and iters < newton_max_iter:
            if c_jac(sid, p, n, t_prev, v, Jf):
                err_node[0] = k - 1
                return C_ERR_RHS
            for r in range(n):
                for c in range(n):
                    J[r * n + c] = -Jf[r * n + c] * d_over_k
                J[r * n + r] -= 1.0
            for j in range(n):
                b[j] = g[j]
            if not c_lu(n, J, b, delta):
                err_node[0] = k - 1
                return C_ERR_SWEEP
            scale = 1.0
            res_try = INFINITY
            for halve in range(max_halvings + 1):
                for j in range(n):
                    v_try[j] = v[j] - scale * delta[j]
                if c_rhs(sid, p, n, t_prev, v_try, f):
                    res_try = INFINITY
                    scale *= 0.5
                    continue
                c_step_residual(n, v_try, &u[k * n], &tilde[(k - 1) * n],
                                &tilde[k * n], f, d_over_k, relax_k, g)
                res_try = 0.0
                finite = True
                for j in range(n):
                    a = fabs(g[j])
                    if a != a:
                        finite = False
                        break
                    if a > res_try:
                        res_try = a
                if not finite:
                    res_try = INFINITY
                if res_try < res or res_try <= newton_tol or max_halvings == 0:
                    break
                scale *= 0.5
            if not isfinite(res_try):
                err_node[0] = k - 1
                return C_ERR_SWEEP
            for j in range(n):
                v[j] = v_try[j]
            res = res_try
            iters += 1
        if res > newton_tol:
            err_node[0] = k - 1
            return C_ERR_SWEEP
        for j in range(n):
            u[(k - 1) * n + j] = v[j]
    return 0


cdef int c_correction(int sid, const double* p, int n, int n_nodes,
                      const double* tilde, double d, double relax_k,
                      double* E, double* f_prev, double* f_cur,
                      Py_ssize_t* err_node) noexcept nogil:
    cdef double d_over_k = d / relax_k
    cdef int m, j
    cdef double* tswap
    for j in range(n):
        E[j] = 0.0
    if c_rhs(sid, p, n, 0.0, tilde, f_prev):
        err_node[0] = 0
        return C_ERR_RHS
    for m in range(1, n_nodes + 1):
        if c_rhs(sid, p, n, m * d, &tilde[m * n], f_cur):
            err_node[0] = m
            return C_ERR_RHS
        for j in range(n):
            E[j] += m * (f_prev[j] - f_cur[j]) * d_over_k
        tswap = f_prev
        f_prev = f_cur
        f_cur = tswap
    return 0


cdef int c_tele(int sid, const double* p, int n, int n_nodes, const double* u,
                const double* tilde, double d, double relax_k, double* E,
                double* f_prev, double* f_cur, double* worst,
                Py_ssize_t* err_node) noexcept nogil:
    cdef double d_over_k = d / relax_k
    cdef double kd_over_k, dT, viol, wrst = 0.0
    cdef int k, j
    cdef double* tswap
    for j in range(n):
        E[j] = 0.0
    if c_rhs(sid, p, n, 0.0, u, f_prev):
        err_node[0] = 0
        return C_ERR_RHS
    for k in range(1, n_nodes + 1):
        if c_rhs(sid, p, n, k * d, &u[k * n], f_cur):
            err_node[0] = k
            return C_ERR_RHS
        kd_over_k = (k * d) / relax_k
        for j in range(n):
            E[j] += k * (f_prev[j] - f_cur[j]) * d_over_k
            dT = tilde[k * n + j] - tilde[j]
            viol = fabs(((u[k * n + j] - u[j]) - dT) + dT / relax_k
                        - f_cur[j] * kd_over_k - E[j])
            if viol > wrst:
                wrst = viol
        tswap = f_prev
        f_prev = f_cur
        f_cur = tswap
    worst[0] = wrst
    return 0


cdef int c_euler_defect(int sid, const double* p, int n, int n_nodes,
                        const double* u, double d, double* f, double* worst,
                        Py_ssize_t* err_node) noexcept nogil:
    cdef double wrst = 0.0, viol
    cdef int k, j
    for k in range(1, n_nodes + 1):
        if c_rhs(sid, p, n, (k - 1) * d, &u[(k - 1) * n], f):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            viol = fabs(u[k * n + j] - u[(k - 1) * n + j] - f[j] * d)
            if viol > wrst:
                wrst = viol
    worst[0] = wrst
    return 0


cdef int c_euler_path(int sid, const double* p, int n, int n_steps, double* u,
                      double d, double* f, Py_ssize_t* err_node) noexcept nogil:
    cdef int k, j
    for k in range(1, n_steps + 1):
        if c_rhs(sid, p, n, (k - 1) * d, &u[(k - 1) * n], f):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            u[k * n + j] = u[(k - 1) * n + j] + f[j] * d
    return 0


cdef int c_rk4_path(int sid, const double* p, int n, int n_steps, double* u,
                    double d, double* k1, double* k2, double* k3, double* k4,
                    double* tmp, Py_ssize_t* err_node) noexcept nogil:
    cdef int k, j
    cdef double t
    for k in range(1, n_steps + 1):
        t = (k - 1) * d
        if c_rhs(sid, p, n, t, &u[(k - 1) * n], k1):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            tmp[j] = u[(k - 1) * n + j] + 0.5 * d * k1[j]
        if c_rhs(sid, p, n, t + 0.5 * d, tmp, k2):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            tmp[j] = u[(k - 1) * n + j] + 0.5 * d * k2[j]
        if c_rhs(sid, p, n, t + 0.5 * d, tmp, k3):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            tmp[j] = u[(k - 1) * n + j] + d * k3[j]
        if c_rhs(sid, p, n, t + d, tmp, k4):
            err_node[0] = k - 1
            return C_ERR_RHS
        for j in range(n):
            u[k * n + j] = u[(k - 1) * n + j] + (d / 6.0) * (
                k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return 0


cdef int c_endpoint_solve(int sid, const double* p, int n, int n_nodes,
                          const double* tilde, double d, double relax_k,
                          const Py_ssize_t* free0, int nf,
                          const Py_ssize_t* fixed0_idx, const double* fixed0_val, int nf0,
                          const Py_ssize_t* unkN, int nu,
                          const Py_ssize_t* fixedN_idx, const double* fixedN_val, int nfN,
                          const double* E, double newton_tol, int newton_max_iter,
                          int max_halvings, double* u0, double* uN, double* fN,
                          double* r, double* Jz, double* Jf, double* A, double* b,
                          double* delta, double* z, double* z_try,
                          int* out_iters, bint* out_ok, double* out_res) noexcept nogil:
    """Damped Newton on the endpoint system. Returns 0 (see out_ok) or C_ERR_RHS."""
    cdef double t_end = n_nodes * d
    cdef double tf_over_k = (n_nodes * d) / relax_k
    cdef int nz = nf + nu
    cdef double dT, res, res_try, scale
    cdef int i, j, iters, halve
    cdef Py_ssize_t comp
    for i in range(nf0):
        u0[fixed0_idx[i]] = fixed0_val[i]
    for i in range(nfN):
        uN[fixedN_idx[i]] = fixedN_val[i]
    for i in range(nf):
        z[i] = tilde[free0[i]]
    for i in range(nu):
        z[nf + i] = tilde[n_nodes * n + unkN[i]]
    for i in range(nf):
        u0[free0[i]] = z[i]
    for i in range(nu):
        uN[unkN[i]] = z[nf + i]
    if c_rhs(sid, p, n, t_end, uN, fN):
        return C_ERR_RHS
    for j in range(n):
        dT = tilde[n_nodes * n + j] - tilde[j]
        r[j] = ((uN[j] - u0[j]) - dT) + dT / relax_k - fN[j] * tf_over_k - E[j]
    res = 0.0
    for j in range(n):
        if fabs(r[j]) > res:
            res = fabs(r[j])
    iters = 0
    while res > newton_tol and iters < newton_max_iter:
        if c_jac(sid, p, n, t_end, uN, Jf):
            return C_ERR_RHS
        for j in range(n):
            for i in range(nf):
                Jz[j * nz + i] = -1.0 if free0[i] == j else 0.0
            for i in range(nu):
                comp = unkN[i]
                Jz[j * nz + nf + i] = (1.0 if comp == j else 0.0) \
                    - Jf[j * n + comp] * tf_over_k
        for i in range(n * nz):
            A[i] = Jz[i]
        for j in range(n):
            b[j] = r[j]
        if not c_lu(nz, A, b, delta):
            out_iters[0] = iters
            out_ok[0] = False
            out_res[0] = res
            return 0
        scale = 1.0
        res_try = INFINITY
        for halve in range(max_halvings + 1):
            for i in range(nz):
                z_try[i] = z[i] - scale * delta[i]
            for i in range(nf):
                u0[free0[i]] = z_try[i]
            for i in range(nu):
                uN[unkN[i]] = z_try[nf + i]
            if c_rhs(sid, p, n, t_end, uN, fN):
                res_try = INFINITY
                scale *= 0.5
                continue
            for j in range(n):
                dT = tilde[n_nodes * n + j] - tilde[j]
                r[j] = ((uN[j] - u0[j]) - dT) + dT / relax_k - fN[j] * tf_over_k - E[j]
            res_try = 0.0
            for j in range(n):
                if fabs(r[j]) > res_try:
                    res_try = fabs(r[j])
            if not isfinite(res_try):
                res_try = INFINITY
            if res_try < res or res_try <= newton_tol or max_halvings == 0:
                break
            scale *= 0.5
        if not isfinite(res_try):
            for i in range(nf):
                u0[free0[i]] = z[i]
            for i in range(nu):
                uN[unkN[i]] = z[nf + i]
            out_iters[0] = iters
            out_ok[0] = False
            out_res[0] = res
            return 0
        for i in range(nz):
            z[i] = z_try[i]
        res = res_try
        iters += 1
    for i in range(nf):
        u0[free0[i]] = z[i]
    for i in range(nu):
        uN[unkN[i]] = z[nf + i]
    out_iters[0] = iters
    out_ok[0] = res <= newton_tol
    out_res[0] = res
    return 0


# ---------------------------------------------------------------------------
# Python-visible wrappers
# ---------------------------------------------------------------------------

def sweep(int sid, const double[::1] params, int n, const double[::1] u_end,
          const double[:, ::1] tilde, double d, double relax_k,
          double newton_tol, int newton_max_iter, int max_halvings):
    cdef int n_nodes = tilde.shape[0] - 1
    u_arr = np.empty((n_nodes + 1, n))
    cdef double[:, ::1] u = u_arr
    g_ = np.empty(n); J_ = np.empty(n * n); Jf_ = np.empty(n * n)
    delta_ = np.empty(n); b_ = np.empty(n); v_ = np.empty(n)
    vt_ = np.empty(n); f_ = np.empty(n)
    cdef double[::1] g = g_, J = J_, Jf = Jf_, delta = delta_, b = b_
    cdef double[::1] v = v_, v_try = vt_, f = f_
    cdef Py_ssize_t err_node = -1
    cdef int code
    cdef int j
    for j in range(n):
        u[n_nodes, j] = u_end[j]
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_sweep(sid, pp, n, n_nodes, &u[0, 0], &tilde[0, 0], d, relax_k,
                       newton_tol, newton_max_iter, max_halvings, &g[0], &J[0],
                       &Jf[0], &delta[0], &b[0], &v[0], &v_try[0], &f[0],
                       &err_node)
    return u_arr, code, err_node


def endpoint_correction(int sid, const double[::1] params, int n,
                        const double[:, ::1] tilde, double d, double relax_k):
    cdef int n_nodes = tilde.shape[0] - 1
    E_arr = np.zeros(n)
    cdef double[::1] E = E_arr
    fp_ = np.empty(n); fc_ = np.empty(n)
    cdef double[::1] fp = fp_, fc = fc_
    cdef Py_ssize_t err_node = -1
    cdef int code
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_correction(sid, pp, n, n_nodes, &tilde[0, 0], d, relax_k,
                            &E[0], &fp[0], &fc[0], &err_node)
    return E_arr, code, err_node


def telescoping_max(int sid, const double[::1] params, int n,
                    const double[:, ::1] u, const double[:, ::1] tilde,
                    double d, double relax_k):
    cdef int n_nodes = u.shape[0] - 1
    E_ = np.zeros(n); fp_ = np.empty(n); fc_ = np.empty(n)
    cdef double[::1] E = E_, fp = fp_, fc = fc_
    cdef double worst = 0.0
    cdef Py_ssize_t err_node = -1
    cdef int code
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_tele(sid, pp, n, n_nodes, &u[0, 0], &tilde[0, 0], d, relax_k,
                      &E[0], &fp[0], &fc[0], &worst, &err_node)
    return worst, code, err_node


def euler_defect(int sid, const double[::1] params, int n,
                 const double[:, ::1] u, double d):
    cdef int n_nodes = u.shape[0] - 1
    f_ = np.empty(n)
    cdef double[::1] f = f_
    cdef double worst = 0.0
    cdef Py_ssize_t err_node = -1
    cdef int code
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_euler_defect(sid, pp, n, n_nodes, &u[0, 0], d, &f[0],
                              &worst, &err_node)
    return worst, code, err_node


def euler_path(int sid, const double[::1] params, int n, const double[::1] u0,
               double d, int n_steps):
    u_arr = np.empty((n_steps + 1, n))
    cdef double[:, ::1] u = u_arr
    f_ = np.empty(n)
    cdef double[::1] f = f_
    cdef Py_ssize_t err_node = -1
    cdef int code, j
    for j in range(n):
        u[0, j] = u0[j]
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_euler_path(sid, pp, n, n_steps, &u[0, 0], d, &f[0], &err_node)
    return u_arr, code, err_node


def rk4_path(int sid, const double[::1] params, int n, const double[::1] u0,
             double d, int n_steps):
    u_arr = np.empty((n_steps + 1, n))
    cdef double[:, ::1] u = u_arr
    k1_ = np.empty(n); k2_ = np.empty(n); k3_ = np.empty(n); k4_ = np.empty(n)
    tmp_ = np.empty(n)
    cdef double[::1] k1 = k1_, k2 = k2_, k3 = k3_, k4 = k4_, tmp = tmp_
    cdef Py_ssize_t err_node = -1
    cdef int code, j
    for j in range(n):
        u[0, j] = u0[j]
    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    with nogil:
        code = c_rk4_path(sid, pp, n, n_steps, &u[0, 0], d, &k1[0], &k2[0],
                          &k3[0], &k4[0], &tmp[0], &err_node)
    return u_arr, code, err_node


def outer_run(int sid, const double[::1] params, int n,
              const double[:, ::1] guess, double d, double relax_k,
              const Py_ssize_t[::1] free0, const Py_ssize_t[::1] fixed0_idx,
              const double[::1] fixed0_val, const Py_ssize_t[::1] unkN,
              const Py_ssize_t[::1] fixedN_idx, const double[::1] fixedN_val,
              double outer_tol, int max_outer, double newton_tol,
              int newton_max_iter, int max_halvings, int correction_on,
              int collect_diagnostics):
    cdef int n_nodes = guess.shape[0] - 1
    cdef int nf = free0.shape[0]
    cdef int nu = unkN.shape[0]
    cdef int nz = nf + nu

    tilde_arr = np.array(guess, dtype=float)
    u_arr = np.empty_like(tilde_arr)
    cdef double[:, ::1] tilde = tilde_arr
    cdef double[:, ::1] u = u_arr

    E_ = np.zeros(n); Et_ = np.zeros(n); fp_ = np.empty(n); fc_ = np.empty(n)
    u0e_ = np.empty(n); uNe_ = np.empty(n); fN_ = np.empty(n); r_ = np.empty(n)
    Jz_ = np.empty(max(n * nz, 1)); Jf_ = np.empty(n * n)
    A_ = np.empty(max(n * nz, 1)); b_ = np.empty(n)
    delta_ = np.empty(max(nz, 1)); z_ = np.empty(max(nz, 1))
    zt_ = np.empty(max(nz, 1))
    g_ = np.empty(n); J_ = np.empty(n * n); v_ = np.empty(n); vt_ = np.empty(n)
    f_ = np.empty(n)
    cdef double[::1] E = E_, Et = Et_, fp = fp_, fc = fc_, u0e = u0e_, uNe = uNe_
    cdef double[::1] fN = fN_, r = r_, Jz = Jz_, Jf = Jf_, A = A_, b = b_
    cdef double[::1] delta = delta_, z = z_, z_try = zt_
    cdef double[::1] g = g_, J = J_, v = v_, v_try = vt_, f = f_

    cdef const double* pp = &params[0] if params.shape[0] else <const double*> NULL
    cdef const Py_ssize_t* pfree0 = &free0[0] if nf else <const Py_ssize_t*> NULL
    cdef const Py_ssize_t* punkN = &unkN[0] if nu else <const Py_ssize_t*> NULL
    cdef const Py_ssize_t* pf0i = &fixed0_idx[0] if fixed0_idx.shape[0] else <const Py_ssize_t*> NULL
    cdef const double* pf0v = &fixed0_val[0] if fixed0_val.shape[0] else <const double*> NULL
    cdef const Py_ssize_t* pfNi = &fixedN_idx[0] if fixedN_idx.shape[0] else <const Py_ssize_t*> NULL
    cdef const double* pfNv = &fixedN_val[0] if fixedN_val.shape[0] else <const double*> NULL

    update_history = []
    discrepancy_history = []
    telescoping_history = []
    context = {}
    cdef int status = STATUS_MAX_OUTER
    cdef int it, code, e_iters = 0, i, j, k
    cdef bint e_ok = False
    cdef double e_res = 0.0, worst = 0.0, disc, a, upd, rel
    cdef Py_ssize_t err_node = -1

    for it in range(max_outer):
        if correction_on:
            with nogil:
                code = c_correction(sid, pp, n, n_nodes, &tilde[0, 0], d,
                                    relax_k, &E[0], &fp[0], &fc[0], &err_node)
            if code != 0:
                status = STATUS_RHS_FAIL
                context = {"rhs_node": int(err_node),
                           "rhs_error": "rhs evaluation failed in endpoint correction"}
                break
        with nogil:
            code = c_endpoint_solve(
                sid, pp, n, n_nodes, &tilde[0, 0], d, relax_k, pfree0, nf,
                pf0i, pf0v, fixed0_idx.shape[0], punkN, nu, pfNi, pfNv,
                fixedN_idx.shape[0], &E[0], newton_tol, newton_max_iter,
                max_halvings, &u0e[0], &uNe[0], &fN[0], &r[0], &Jz[0], &Jf[0],
                &A[0], &b[0], &delta[0], &z[0], &z_try[0], &e_iters, &e_ok,
                &e_res)
        if code == C_ERR_RHS:
            status = STATUS_RHS_FAIL
            context = {"rhs_node": n_nodes,
                       "rhs_error": "rhs evaluation failed in endpoint system"}
            break
        if not e_ok:
            status = STATUS_ENDPOINT_FAIL
            context = {"endpoint_unknowns": np.concatenate(
                           [u0e_[np.asarray(free0)] if nf else np.empty(0),
                            uNe_[np.asarray(unkN)] if nu else np.empty(0)]),
                       "endpoint_residual": e_res}
            break
        for j in range(n):
            u[n_nodes, j] = uNe[j]
        with nogil:
            code = c_sweep(sid, pp, n, n_nodes, &u[0, 0], &tilde[0, 0], d,
                           relax_k, newton_tol, newton_max_iter, max_halvings,
                           &g[0], &J[0], &Jf[0], &delta[0], &b[0], &v[0],
                           &v_try[0], &f[0], &err_node)
        if code == C_ERR_RHS:
            status = STATUS_RHS_FAIL
            context = {"rhs_node": int(err_node),
                       "rhs_error": "rhs evaluation failed in sweep"}
            break
        if code == C_ERR_SWEEP:
            status = STATUS_SWEEP_FAIL
            context = {"sweep_node": int(err_node),
                       "sweep_error": "sweep Newton did not converge"}
            break
        if collect_diagnostics:
            with nogil:
                code = c_tele(sid, pp, n, n_nodes, &u[0, 0], &tilde[0, 0], d,
                              relax_k, &Et[0], &fp[0], &fc[0], &worst, &err_node)
            if code != 0:
                status = STATUS_RHS_FAIL
                context = {"rhs_node": int(err_node),
                           "rhs_error": "rhs evaluation failed in diagnostics"}
                break
            telescoping_history.append(worst)
        disc = 0.0
        for j in range(n):
            a = fabs(u[0, j] - u0e[j])
            if a > disc:
                disc = a
        discrepancy_history.append(disc)
        for i in range(fixed0_idx.shape[0]):
            u[0, fixed0_idx[i]] = fixed0_val[i]
        upd = 0.0
        with nogil:
            for k in range(n_nodes + 1):
                for j in range(n):
                    rel = fabs(u[k, j] - tilde[k, j]) / (1.0 + fabs(u[k, j]))
                    if rel > upd:
                        upd = rel
        update_history.append(upd)
        tilde_arr, u_arr = u_arr, tilde_arr
        tilde = tilde_arr
        u = u_arr
        if upd <= outer_tol:
            status = STATUS_CONVERGED
            break
        if upd > DIVERGENCE_GUARD:
            status = STATUS_DIVERGED
            break

    return tilde_arr, status, update_history, discrepancy_history, \
        telescoping_history, context
