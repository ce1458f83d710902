"""Pure-numpy twins of the kernels in ``_kernels_numba``.

Same names, same signatures, same ``net`` tuple layout.  Mean-field sums use
``np.cumsum`` so the reduction order is ascending index, as in the loops.
"""

import numpy as np

ALL_TO_ALL, SAKAGUCHI, GRAPH, PAIRWISE = 0, 1, 2, 3


def _seqsum(a, axis=0):
    return np.cumsum(a, axis=axis)[-1]


def mean_field_sums(theta):
    return float(_seqsum(np.sin(theta))), float(_seqsum(np.cos(theta)))


def _coupling(x, s, co, r1, r2, net):
    kind, K = net[2], net[3]
    n = x.size
    if kind == ALL_TO_ALL:
        return (K / n) * (r1 * co - r2 * s)
    if kind == SAKAGUCHI:
        ca, sa = np.cos(net[4]), np.sin(net[4])
        return (K / n) * (ca * (r1 * co - r2 * s) + sa * (r2 * co + r1 * s))
    if kind == GRAPH:
        indptr, indices, weights = net[5], net[6], net[7]
        rows = np.repeat(np.arange(n), np.diff(indptr))
        a = np.bincount(rows, weights=weights * s[indices], minlength=n)
        b = np.bincount(rows, weights=weights * co[indices], minlength=n)
        return co * a - s * b
    diff = np.sin(x[None, :] - x[:, None])
    return (K / n) * diff.sum(axis=1)


def _forcing(s, co, net, u):
    omega, v, F, c = net[0], net[1], net[8], net[9]
    cu = c * np.asarray(u, dtype=np.float64)
    return omega + F * (np.sin(cu)[v] * co - np.cos(cu)[v] * s)


def _field(x, net, u):
    s, co = np.sin(x), np.cos(x)
    r1, r2 = _seqsum(s), _seqsum(co)
    return _coupling(x, s, co, r1, r2, net) + _forcing(s, co, net, u)


def _features_dot(s, co, W, variant):
    n = s.size
    out = W[:, 0] + W[:, 1 : 1 + n] @ s
    if variant == 2:
        out = out + W[:, 1 + n :] @ co
    elif variant == 3:
        out = out + W[:, 1 + n :] @ (s * s)
    return out


def driven_field(theta, net, u):
    return _field(np.asarray(theta, dtype=np.float64), net, u)


def predict(theta, W, variant):
    return _features_dot(np.sin(theta), np.cos(theta), W, variant)


def _auto(x, net, W, variant):
    s, co = np.sin(x), np.cos(x)
    r1, r2 = _seqsum(s), _seqsum(co)
    uhat = _features_dot(s, co, W, variant)
    return _coupling(x, s, co, r1, r2, net) + _forcing(s, co, net, uhat), s, co, r1, r2, uhat


def autonomous_field(theta, net, W, variant):
    return _auto(np.asarray(theta, dtype=np.float64), net, W, variant)[0]


def driven_trajectory(theta0, net, U, h, n_steps, scheme, states):
    record = states.shape[0] == n_steps
    x = np.array(theta0, dtype=np.float64)
    for i in range(n_steps):
        if record:
            states[i] = x
        k1 = _field(x, net, U[2 * i])
        if scheme == 1:
            x = x + h * k1
            continue
        k2 = _field(x + 0.5 * h * k1, net, U[2 * i + 1])
        k3 = _field(x + 0.5 * h * k2, net, U[2 * i + 1])
        k4 = _field(x + h * k3, net, U[2 * i + 2])
        x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return x


def closed_trajectory(theta0, net, W, variant, h, n_steps, scheme, pred, rseries):
    x = np.array(theta0, dtype=np.float64)
    n = x.size
    for i in range(n_steps):
        k1, _, _, r1, r2, uhat = _auto(x, net, W, variant)
        pred[i] = uhat
        rseries[i] = np.sqrt(r1 * r1 + r2 * r2) / n
        if scheme == 1:
            k2 = _field(x + 0.5 * h * k1, net, uhat)
            k3 = _field(x + 0.5 * h * k2, net, uhat)
            k4 = _field(x + h * k3, net, uhat)
        else:
            k2 = _auto(x + 0.5 * h * k1, net, W, variant)[0]
            k3 = _auto(x + 0.5 * h * k2, net, W, variant)[0]
            k4 = _auto(x + h * k3, net, W, variant)[0]
        x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return x


def _readout_grad(s, co, W, variant):
    n = s.size
    if variant == 1:
        return W[:, 1 : 1 + n] * co
    if variant == 2:
        return W[:, 1 : 1 + n] * co - W[:, 1 + n :] * s
    return (W[:, 1 : 1 + n] + 2.0 * W[:, 1 + n :] * s) * co


def _jvp(x, s, co, r1, r2, uhat, net, W, variant, V):
    kind, K, v, F, c = net[2], net[3], net[1], net[8], net[9]
    n = x.size
    cu = c * uhat[v]
    g = F * (np.cos(cu) * co + np.sin(cu) * s)
    sc, ss = co[:, None], s[:, None]
    if kind == GRAPH:
        indptr, indices, weights = net[5], net[6], net[7]
        rows = np.repeat(np.arange(n), np.diff(indptr))
        wc = weights * co[indices]
        ws = weights * s[indices]
        a0 = np.bincount(rows, weights=wc, minlength=n)
        b0 = np.bincount(rows, weights=ws, minlength=n)
        out = np.empty_like(V)
        for q in range(V.shape[1]):
            vq = V[indices, q]
            a = np.bincount(rows, weights=wc * vq, minlength=n)
            b = np.bincount(rows, weights=ws * vq, minlength=n)
            out[:, q] = co * a + s * b - V[:, q] * (co * a0 + s * b0)
    else:
        cv = _seqsum(sc * V)
        sv = _seqsum(ss * V)
        p = sc * cv + ss * sv - V * (sc * r2 + ss * r1)
        if kind == SAKAGUCHI:
            ca, sa = np.cos(net[4]), np.sin(net[4])
            t = sc * sv - ss * cv - V * (sc * r1 - ss * r2)
            out = (K / n) * (ca * p - sa * t)
        else:
            out = (K / n) * p
    du = _readout_grad(s, co, W, variant) @ V
    return out + g[:, None] * (c * du[v] - V)


def jacobian_vector_product(theta, net, W, variant, V):
    x = np.asarray(theta, dtype=np.float64)
    s, co = np.sin(x), np.cos(x)
    r1, r2 = _seqsum(s), _seqsum(co)
    uhat = _features_dot(s, co, W, variant)
    return _jvp(x, s, co, r1, r2, uhat, net, W, variant, np.asarray(V, dtype=np.float64))


def jacobian_dense(theta, net, W, variant):
    x = np.asarray(theta, dtype=np.float64)
    kind, K, v, F, c = net[2], net[3], net[1], net[8], net[9]
    n = x.size
    s, co = np.sin(x), np.cos(x)
    uhat = _features_dot(s, co, W, variant)
    if kind == GRAPH:
        indptr, indices, weights = net[5], net[6], net[7]
        rows = np.repeat(np.arange(n), np.diff(indptr))
        J = np.zeros((n, n))
        vals = weights * np.cos(x[indices] - x[rows])
        np.add.at(J, (rows, indices), vals)
    else:
        alpha = net[4] if kind == SAKAGUCHI else 0.0
        J = (K / n) * np.cos(x[None, :] - x[:, None] + alpha)
    J[np.diag_indices(n)] -= J.sum(axis=1)
    cu = c * uhat[v]
    g = F * (np.cos(cu) * co + np.sin(cu) * s)
    D = _readout_grad(s, co, W, variant)
    J += (g * c)[:, None] * D[v]
    J[np.diag_indices(n)] -= g
    return J


def _mgs(Q, logs):
    k = Q.shape[1]
    for q in range(k):
        for p in range(q):
            Q[:, q] -= (Q[:, p] @ Q[:, q]) * Q[:, p]
        nrm = np.sqrt(Q[:, q] @ Q[:, q])
        if not nrm > 1e-300:
            return False
        Q[:, q] /= nrm
        logs[q] += np.log(nrm)
    return True


def lyapunov_run(theta0, net, W, variant, h, n_steps, Q0, period, dense):
    x = np.array(theta0, dtype=np.float64)
    Q = np.array(Q0, dtype=np.float64)
    k = Q.shape[1]
    logs = np.zeros(k)
    history = []

    def stage(y, P):
        dy, s, co, r1, r2, uhat = _auto(y, net, W, variant)
        if dense:
            dP = jacobian_dense(y, net, W, variant) @ P
        else:
            dP = _jvp(y, s, co, r1, r2, uhat, net, W, variant, P)
        return dy, dP

    for i in range(n_steps):
        k1, l1 = stage(x, Q)
        k2, l2 = stage(x + 0.5 * h * k1, Q + 0.5 * h * l1)
        k3, l3 = stage(x + 0.5 * h * k2, Q + 0.5 * h * l2)
        k4, l4 = stage(x + h * k3, Q + h * l3)
        x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        Q = Q + h * (l1 + 2.0 * l2 + 2.0 * l3 + l4) / 6.0
        if (i + 1) % period == 0 or i == n_steps - 1:
            if not _mgs(Q, logs):
                return False, logs, np.array(history).reshape(-1, k), x, Q
            history.append(logs.copy())
    return True, logs, np.array(history).reshape(-1, k), x, Q
