"""numba kernels for the oscillator reservoir.

Every function here has a twin of the same name and signature in
``_kernels_numpy``.  The network parameters travel as one tuple ``net``::

    (omega, v, kind, K, alpha, indptr, indices, weights, F, c)

``v`` holds 0-based input indices; ``kind`` is 0 all-to-all (mean field),
1 Kuramoto-Sakaguchi, 2 sparse graph (CSR, weights already scaled),
3 all-to-all evaluated pairwise in O(N^2) (reference path).

Readout variants: 1 ``[1, sin]``, 2 ``[1, sin, cos]``, 3 ``[1, sin, sin^2]``.
Mean-field sums run in ascending index order.
"""

import math

import numpy as np
from numba import njit

ALL_TO_ALL, SAKAGUCHI, GRAPH, PAIRWISE = 0, 1, 2, 3


@njit(cache=True)
def _trig(x, s, co):
    r1 = 0.0
    r2 = 0.0
    for j in range(x.size):
        sj = math.sin(x[j])
        cj = math.cos(x[j])
        s[j] = sj
        co[j] = cj
        r1 += sj
        r2 += cj
    return r1, r2


@njit(cache=True)
def mean_field_sums(theta):
    r1 = 0.0
    r2 = 0.0
    for j in range(theta.size):
        r1 += math.sin(theta[j])
        r2 += math.cos(theta[j])
    return r1, r2


@njit(cache=True)
def _coupling(x, s, co, r1, r2, net, out):
    kind = net[2]
    K = net[3]
    n = x.size
    if kind == 0:
        kn = K / n
        for k in range(n):
            out[k] = kn * (r1 * co[k] - r2 * s[k])
    elif kind == 1:
        kn = K / n
        ca = math.cos(net[4])
        sa = math.sin(net[4])
        for k in range(n):
            out[k] = kn * (ca * (r1 * co[k] - r2 * s[k]) + sa * (r2 * co[k] + r1 * s[k]))
    elif kind == 2:
        indptr = net[5]
        indices = net[6]
        weights = net[7]
        for k in range(n):
            a = 0.0
            b = 0.0
            for e in range(indptr[k], indptr[k + 1]):
                j = indices[e]
                a += weights[e] * s[j]
                b += weights[e] * co[j]
            out[k] = co[k] * a - s[k] * b
    else:
        kn = K / n
        for k in range(n):
            acc = 0.0
            for j in range(n):
                acc += math.sin(x[j] - x[k])
            out[k] = kn * acc


@njit(cache=True)
def _add_forcing(s, co, net, u, out):
    v = net[1]
    F = net[8]
    c = net[9]
    m = u.size
    su = np.empty(m)
    cu = np.empty(m)
    for a in range(m):
        su[a] = math.sin(c * u[a])
        cu[a] = math.cos(c * u[a])
    omega = net[0]
    for k in range(s.size):
        a = v[k]
        out[k] += omega[k] + F * (su[a] * co[k] - cu[a] * s[k])


@njit(cache=True)
def _field(x, net, u, s, co, out):
    r1, r2 = _trig(x, s, co)
    _coupling(x, s, co, r1, r2, net, out)
    _add_forcing(s, co, net, u, out)
    return r1, r2


@njit(cache=True)
def _predict(s, co, W, variant, out):
    m = W.shape[0]
    n = s.size
    for a in range(m):
        acc = W[a, 0]
        if variant == 1:
            for j in range(n):
                acc += W[a, 1 + j] * s[j]
        elif variant == 2:
            for j in range(n):
                acc += W[a, 1 + j] * s[j] + W[a, 1 + n + j] * co[j]
        else:
            for j in range(n):
                sj = s[j]
                acc += W[a, 1 + j] * sj + W[a, 1 + n + j] * (sj * sj)
        out[a] = acc


@njit(cache=True)
def driven_field(theta, net, u):
    n = theta.size
    out = np.empty(n)
    _field(theta, net, u, np.empty(n), np.empty(n), out)
    return out


@njit(cache=True)
def predict(theta, W, variant):
    n = theta.size
    s = np.empty(n)
    co = np.empty(n)
    _trig(theta, s, co)
    out = np.empty(W.shape[0])
    _predict(s, co, W, variant, out)
    return out


@njit(cache=True)
def autonomous_field(theta, net, W, variant):
    n = theta.size
    s = np.empty(n)
    co = np.empty(n)
    uhat = np.empty(W.shape[0])
    out = np.empty(n)
    r1, r2 = _trig(theta, s, co)
    _predict(s, co, W, variant, uhat)
    _coupling(theta, s, co, r1, r2, net, out)
    _add_forcing(s, co, net, uhat, out)
    return out


@njit(cache=True)
def driven_trajectory(theta0, net, U, h, n_steps, scheme, states):
    """Step the input-driven network ``n_steps`` times.

    ``U`` is sampled on the half-step grid: row ``2 i`` is ``u^(i)`` and row
    ``2 i + 1`` is ``u^(i + 1/2)``.  ``scheme`` 0 is RK4, 1 is explicit Euler
    on ``u^(i)``.  When ``states`` has ``n_steps`` rows, row ``i`` receives
    the state before step ``i``.
    """
    n = theta0.size
    record = states.shape[0] == n_steps
    x = theta0.copy()
    s = np.empty(n)
    co = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xs = np.empty(n)
    for i in range(n_steps):
        if record:
            for j in range(n):
                states[i, j] = x[j]
        if scheme == 1:
            _field(x, net, U[2 * i], s, co, k1)
            for j in range(n):
                x[j] = x[j] + h * k1[j]
            continue
        _field(x, net, U[2 * i], s, co, k1)
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k1[j]
        _field(xs, net, U[2 * i + 1], s, co, k2)
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k2[j]
        _field(xs, net, U[2 * i + 1], s, co, k3)
        for j in range(n):
            xs[j] = x[j] + h * k3[j]
        _field(xs, net, U[2 * i + 2], s, co, k4)
        for j in range(n):
            x[j] = x[j] + h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
    return x


@njit(cache=True)
def _auto_stage(x, net, W, variant, s, co, uhat, out):
    r1, r2 = _trig(x, s, co)
    _predict(s, co, W, variant, uhat)
    _coupling(x, s, co, r1, r2, net, out)
    _add_forcing(s, co, net, uhat, out)
    return r1, r2


@njit(cache=True)
def closed_trajectory(theta0, net, W, variant, h, n_steps, scheme, pred, rseries):
    """Step the autonomous network; row ``i`` of ``pred`` is the readout of
    the state before step ``i`` and ``rseries[i]`` its order-parameter modulus.

    ``scheme`` 0 re-evaluates the feedback at every RK4 stage, 1 freezes it
    at the step's initial state (RK4 in the phases, RK1 in the feedback).
    """
    n = theta0.size
    m = W.shape[0]
    x = theta0.copy()
    s = np.empty(n)
    co = np.empty(n)
    uhat = np.empty(m)
    u0 = np.empty(m)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xs = np.empty(n)
    for i in range(n_steps):
        r1, r2 = _auto_stage(x, net, W, variant, s, co, uhat, k1)
        for a in range(m):
            pred[i, a] = uhat[a]
            u0[a] = uhat[a]
        rseries[i] = math.sqrt(r1 * r1 + r2 * r2) / n
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k1[j]
        if scheme == 1:
            _field(xs, net, u0, s, co, k2)
        else:
            _auto_stage(xs, net, W, variant, s, co, uhat, k2)
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k2[j]
        if scheme == 1:
            _field(xs, net, u0, s, co, k3)
        else:
            _auto_stage(xs, net, W, variant, s, co, uhat, k3)
        for j in range(n):
            xs[j] = x[j] + h * k3[j]
        if scheme == 1:
            _field(xs, net, u0, s, co, k4)
        else:
            _auto_stage(xs, net, W, variant, s, co, uhat, k4)
        for j in range(n):
            x[j] = x[j] + h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
    return x


@njit(cache=True)
def _forcing_gain(s, co, net, uhat, g):
    v = net[1]
    F = net[8]
    c = net[9]
    for k in range(s.size):
        cu = c * uhat[v[k]]
        g[k] = F * (math.cos(cu) * co[k] + math.sin(cu) * s[k])


@njit(cache=True)
def _readout_grad_dot(s, co, W, variant, V, q, du):
    m = W.shape[0]
    n = s.size
    for a in range(m):
        acc = 0.0
        if variant == 1:
            for j in range(n):
                acc += W[a, 1 + j] * co[j] * V[j, q]
        elif variant == 2:
            for j in range(n):
                acc += (W[a, 1 + j] * co[j] - W[a, 1 + n + j] * s[j]) * V[j, q]
        else:
            for j in range(n):
                acc += (W[a, 1 + j] + 2.0 * W[a, 1 + n + j] * s[j]) * co[j] * V[j, q]
        du[a] = acc


@njit(cache=True)
def _jvp(x, s, co, r1, r2, uhat, net, W, variant, V, out):
    n = x.size
    kind = net[2]
    K = net[3]
    v = net[1]
    c = net[9]
    g = np.empty(n)
    _forcing_gain(s, co, net, uhat, g)
    du = np.empty(W.shape[0])
    for q in range(V.shape[1]):
        if kind == 2:
            indptr = net[5]
            indices = net[6]
            weights = net[7]
            for k in range(n):
                a = 0.0
                b = 0.0
                a0 = 0.0
                b0 = 0.0
                for e in range(indptr[k], indptr[k + 1]):
                    j = indices[e]
                    w = weights[e]
                    a += w * co[j] * V[j, q]
                    b += w * s[j] * V[j, q]
                    a0 += w * co[j]
                    b0 += w * s[j]
                out[k, q] = co[k] * a + s[k] * b - V[k, q] * (co[k] * a0 + s[k] * b0)
        else:
            cv = 0.0
            sv = 0.0
            for j in range(n):
                cv += co[j] * V[j, q]
                sv += s[j] * V[j, q]
            kn = K / n
            if kind == 1:
                ca = math.cos(net[4])
                sa = math.sin(net[4])
                for k in range(n):
                    p = co[k] * cv + s[k] * sv - V[k, q] * (co[k] * r2 + s[k] * r1)
                    t = co[k] * sv - s[k] * cv - V[k, q] * (co[k] * r1 - s[k] * r2)
                    out[k, q] = kn * (ca * p - sa * t)
            else:
                for k in range(n):
                    out[k, q] = kn * (co[k] * cv + s[k] * sv - V[k, q] * (co[k] * r2 + s[k] * r1))
        _readout_grad_dot(s, co, W, variant, V, q, du)
        for k in range(n):
            out[k, q] += g[k] * (c * du[v[k]] - V[k, q])


@njit(cache=True)
def jacobian_vector_product(theta, net, W, variant, V):
    n = theta.size
    s = np.empty(n)
    co = np.empty(n)
    uhat = np.empty(W.shape[0])
    r1, r2 = _trig(theta, s, co)
    _predict(s, co, W, variant, uhat)
    out = np.empty(V.shape)
    _jvp(theta, s, co, r1, r2, uhat, net, W, variant, V, out)
    return out


@njit(cache=True)
def jacobian_dense(theta, net, W, variant):
    n = theta.size
    m = W.shape[0]
    s = np.empty(n)
    co = np.empty(n)
    uhat = np.empty(m)
    _trig(theta, s, co)
    _predict(s, co, W, variant, uhat)
    kind = net[2]
    K = net[3]
    v = net[1]
    c = net[9]
    J = np.zeros((n, n))
    if kind == 2:
        indptr = net[5]
        indices = net[6]
        weights = net[7]
        for i in range(n):
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                val = weights[e] * math.cos(theta[j] - theta[i])
                J[i, j] += val
                J[i, i] -= val
    else:
        kn = K / n
        alpha = net[4] if kind == 1 else 0.0
        for i in range(n):
            diag = 0.0
            for j in range(n):
                val = kn * math.cos(theta[j] - theta[i] + alpha)
                J[i, j] += val
                diag += val
            J[i, i] -= diag
    g = np.empty(n)
    _forcing_gain(s, co, net, uhat, g)
    D = np.empty((m, n))
    for a in range(m):
        for j in range(n):
            if variant == 1:
                D[a, j] = W[a, 1 + j] * co[j]
            elif variant == 2:
                D[a, j] = W[a, 1 + j] * co[j] - W[a, 1 + n + j] * s[j]
            else:
                D[a, j] = (W[a, 1 + j] + 2.0 * W[a, 1 + n + j] * s[j]) * co[j]
    for i in range(n):
        for j in range(n):
            J[i, j] += g[i] * c * D[v[i], j]
        J[i, i] -= g[i]
    return J


@njit(cache=True)
def _tangent(x, s, co, r1, r2, uhat, net, W, variant, Q, dense, out):
    if dense:
        J = jacobian_dense(x, net, W, variant)
        out[:, :] = J @ Q
    else:
        _jvp(x, s, co, r1, r2, uhat, net, W, variant, Q, out)


@njit(cache=True)
def _mgs(Q, logs):
    n, k = Q.shape
    for q in range(k):
        for p in range(q):
            d = 0.0
            for j in range(n):
                d += Q[j, p] * Q[j, q]
            for j in range(n):
                Q[j, q] -= d * Q[j, p]
        nrm = 0.0
        for j in range(n):
            nrm += Q[j, q] * Q[j, q]
        nrm = math.sqrt(nrm)
        if not nrm > 1e-300:
            return False
        for j in range(n):
            Q[j, q] /= nrm
        logs[q] += math.log(nrm)
    return True


@njit(cache=True)
def lyapunov_run(theta0, net, W, variant, h, n_steps, Q0, period, dense):
    """Propagate the autonomous state and ``k`` tangent vectors with RK4.

    Tangents are re-orthonormalised (modified Gram-Schmidt) every ``period``
    steps and at the end.  Returns ``(ok, logs, history, theta, Q)`` where
    ``history[r]`` is the cumulative log-stretch after orthonormalisation ``r``.
    """
    n = theta0.size
    k = Q0.shape[1]
    m = W.shape[0]
    x = theta0.copy()
    Q = Q0.copy()
    s = np.empty(n)
    co = np.empty(n)
    uhat = np.empty(m)
    xs = np.empty(n)
    Qs = np.empty((n, k))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    l1 = np.empty((n, k))
    l2 = np.empty((n, k))
    l3 = np.empty((n, k))
    l4 = np.empty((n, k))
    logs = np.zeros(k)
    n_orth = (n_steps + period - 1) // period
    history = np.zeros((n_orth, k))
    r = 0
    for i in range(n_steps):
        r1, r2 = _auto_stage(x, net, W, variant, s, co, uhat, k1)
        _tangent(x, s, co, r1, r2, uhat, net, W, variant, Q, dense, l1)
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k1[j]
            for q in range(k):
                Qs[j, q] = Q[j, q] + 0.5 * h * l1[j, q]
        r1, r2 = _auto_stage(xs, net, W, variant, s, co, uhat, k2)
        _tangent(xs, s, co, r1, r2, uhat, net, W, variant, Qs, dense, l2)
        for j in range(n):
            xs[j] = x[j] + 0.5 * h * k2[j]
            for q in range(k):
                Qs[j, q] = Q[j, q] + 0.5 * h * l2[j, q]
        r1, r2 = _auto_stage(xs, net, W, variant, s, co, uhat, k3)
        _tangent(xs, s, co, r1, r2, uhat, net, W, variant, Qs, dense, l3)
        for j in range(n):
            xs[j] = x[j] + h * k3[j]
            for q in range(k):
                Qs[j, q] = Q[j, q] + h * l3[j, q]
        r1, r2 = _auto_stage(xs, net, W, variant, s, co, uhat, k4)
        _tangent(xs, s, co, r1, r2, uhat, net, W, variant, Qs, dense, l4)
        for j in range(n):
            x[j] = x[j] + h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
            for q in range(k):
                Q[j, q] = Q[j, q] + h * (l1[j, q] + 2.0 * l2[j, q] + 2.0 * l3[j, q] + l4[j, q]) / 6.0
        if (i + 1) % period == 0 or i == n_steps - 1:
            if not _mgs(Q, logs):
                return False, logs, history[:r], x, Q
            history[r, :] = logs
            r += 1
    return True, logs, history[:r], x, Q
