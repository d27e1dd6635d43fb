# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward passes; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int8_t i8
ctypedef cnp.int64_t i64


def evaluate(const i8[:] own, const i64[:] nptr, const i64[:] sptr, const i64[:] suc,
             const double[:] pr, const double[:] pol, Py_ssize_t top):
    cdef Py_ssize_t n = own.shape[0], u, a, k
    cdef double pu, hu, q, ep, eh
    p_arr = np.zeros(n)
    h_arr = np.zeros(n)
    cdef double[:] p = p_arr
    cdef double[:] h = h_arr
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        pu = 0.0
        hu = 0.0
        for a in range(nptr[u], nptr[u + 1]):
            q = pol[a]
            if q <= 0.0:
                continue
            ep = 0.0
            eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                ep += pr[k] * p[suc[k]]
                eh += pr[k] * h[suc[k]]
            pu += q * ep
            hu += q * eh
            if own[u] == 0:
                hu -= q * log(q)
        p[u] = pu
        h[u] = hu
    return p_arr, h_arr


def soft_backward(const i8[:] own, const i64[:] nptr, const i64[:] sptr, const i64[:] suc,
                  const double[:] pr, const double[:] env, Py_ssize_t top, double lam):
    cdef Py_ssize_t n = own.shape[0], m = sptr.shape[0] - 1, u, a, k, v
    cdef double ev, ep, eh, w, top_q, z, vu, pu, hu, s
    V_arr = np.zeros(n)
    p_arr = np.zeros(n)
    h_arr = np.zeros(n)
    Q_arr = np.zeros(m)
    sig_arr = np.zeros(m)
    qp_arr = np.zeros(m)
    qh_arr = np.zeros(m)
    cdef double[:] V = V_arr
    cdef double[:] p = p_arr
    cdef double[:] h = h_arr
    cdef double[:] Q = Q_arr
    cdef double[:] sig = sig_arr
    cdef double[:] qp = qp_arr
    cdef double[:] qh = qh_arr
    V[top] = lam
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        for a in range(nptr[u], nptr[u + 1]):
            ev = 0.0
            ep = 0.0
            eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                w = pr[k]
                v = suc[k]
                ev += w * V[v]
                ep += w * p[v]
                eh += w * h[v]
            Q[a] = ev
            qp[a] = ep
            qh[a] = eh
        pu = 0.0
        hu = 0.0
        if own[u] == 0:
            top_q = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if Q[a] > top_q:
                    top_q = Q[a]
            z = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                z += exp(Q[a] - top_q)
            vu = top_q + log(z)
            for a in range(nptr[u], nptr[u + 1]):
                s = exp(Q[a] - vu)
                sig[a] = s
                if s > 0.0:
                    pu += s * qp[a]
                    hu += s * (qh[a] - log(s))
        else:
            vu = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                s = env[a]
                sig[a] = s
                vu += s * Q[a]
                pu += s * qp[a]
                hu += s * qh[a]
        V[u] = vu
        p[u] = pu
        h[u] = hu
    return V_arr, Q_arr, sig_arr, p_arr, h_arr


def lex_backward(const i8[:] own, const i64[:] nptr, const i64[:] sptr, const i64[:] suc,
                 const double[:] pr, const double[:] env, Py_ssize_t top, double tol):
    cdef Py_ssize_t n = own.shape[0], m = sptr.shape[0] - 1, u, a, k
    cdef double ep, eh, best, hmax, z, vh, s, pu, hu
    p_arr = np.zeros(n)
    h_arr = np.zeros(n)
    sig_arr = np.zeros(m)
    qp_arr = np.zeros(m)
    qh_arr = np.zeros(m)
    cdef double[:] p = p_arr
    cdef double[:] h = h_arr
    cdef double[:] sig = sig_arr
    cdef double[:] qp = qp_arr
    cdef double[:] qh = qh_arr
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        for a in range(nptr[u], nptr[u + 1]):
            ep = 0.0
            eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                ep += pr[k] * p[suc[k]]
                eh += pr[k] * h[suc[k]]
            qp[a] = ep
            qh[a] = eh
        pu = 0.0
        hu = 0.0
        if own[u] == 0:
            best = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] > best:
                    best = qp[a]
            hmax = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= best - tol and qh[a] > hmax:
                    hmax = qh[a]
            z = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= best - tol:
                    z += exp(qh[a] - hmax)
            vh = hmax + log(z)
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= best - tol:
                    s = exp(qh[a] - vh)
                    sig[a] = s
                    pu += s * qp[a]
                    hu += s * (qh[a] - log(s))
                else:
                    sig[a] = 0.0
        else:
            for a in range(nptr[u], nptr[u + 1]):
                s = env[a]
                sig[a] = s
                pu += s * qp[a]
                hu += s * qh[a]
        p[u] = pu
        h[u] = hu
    return sig_arr, p_arr, h_arr


def min_pass(const i8[:] own, const i64[:] nptr, const i64[:] sptr, const i64[:] suc,
             const double[:] pr, const double[:] ego, Py_ssize_t top, int coord):
    cdef Py_ssize_t n = own.shape[0], m = sptr.shape[0] - 1, u, a, k, best
    cdef double vu, q, ev
    val_arr = np.zeros(n)
    env_arr = np.zeros(m)
    cdef double[:] val = val_arr
    cdef double[:] env = env_arr
    if coord == 0:
        val[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        if own[u] == 0:
            vu = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                q = ego[a]
                if q <= 0.0:
                    continue
                ev = 0.0
                for k in range(sptr[a], sptr[a + 1]):
                    ev += pr[k] * val[suc[k]]
                vu += q * ev
                if coord == 1:
                    vu -= q * log(q)
        else:
            best = nptr[u]
            vu = INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                ev = 0.0
                for k in range(sptr[a], sptr[a + 1]):
                    ev += pr[k] * val[suc[k]]
                if ev < vu:
                    vu = ev
                    best = a
            env[best] = 1.0
        val[u] = vu
    return val_arr, env_arr


def min_entropy_pass(const i8[:] own, const i64[:] nptr, const i64[:] sptr, const i64[:] suc,
                     const double[:] pr, Py_ssize_t top, double lam, double tol):
    cdef Py_ssize_t n = own.shape[0], m = sptr.shape[0] - 1, u, a, k, v, best
    cdef bint inf_lam = lam < 0
    cdef double ev, ep, eh, w, bp, hmax, z, vh, s, pu, hu, vu, top_q
    V_arr = np.zeros(n)
    p_arr = np.zeros(n)
    h_arr = np.zeros(n)
    sig_arr = np.zeros(m)
    env_arr = np.zeros(m)
    qv_arr = np.zeros(m)
    qp_arr = np.zeros(m)
    qh_arr = np.zeros(m)
    cdef double[:] V = V_arr
    cdef double[:] p = p_arr
    cdef double[:] h = h_arr
    cdef double[:] sig = sig_arr
    cdef double[:] env = env_arr
    cdef double[:] qv = qv_arr
    cdef double[:] qp = qp_arr
    cdef double[:] qh = qh_arr
    p[top] = 1.0
    V[top] = 0.0 if inf_lam else lam
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        for a in range(nptr[u], nptr[u + 1]):
            ev = 0.0
            ep = 0.0
            eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                w = pr[k]
                v = suc[k]
                ev += w * V[v]
                ep += w * p[v]
                eh += w * h[v]
            qv[a] = ev
            qp[a] = ep
            qh[a] = eh
        if own[u] == 1:
            best = nptr[u]
            for a in range(nptr[u] + 1, nptr[u + 1]):
                if qh[a] < qh[best] - tol or (qh[a] <= qh[best] + tol and qp[a] < qp[best] - tol):
                    best = a
            env[best] = 1.0
            sig[best] = 1.0
            V[u] = qv[best]
            p[u] = qp[best]
            h[u] = qh[best]
            continue
        pu = 0.0
        hu = 0.0
        if inf_lam:
            bp = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] > bp:
                    bp = qp[a]
            hmax = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= bp - tol and qh[a] > hmax:
                    hmax = qh[a]
            z = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= bp - tol:
                    z += exp(qh[a] - hmax)
            vh = hmax + log(z)
            for a in range(nptr[u], nptr[u + 1]):
                if qp[a] >= bp - tol:
                    s = exp(qh[a] - vh)
                else:
                    s = 0.0
                sig[a] = s
                if s > 0.0:
                    pu += s * qp[a]
                    hu += s * (qh[a] - log(s))
            vu = vh
        else:
            top_q = -INFINITY
            for a in range(nptr[u], nptr[u + 1]):
                if qv[a] > top_q:
                    top_q = qv[a]
            z = 0.0
            for a in range(nptr[u], nptr[u + 1]):
                z += exp(qv[a] - top_q)
            vu = top_q + log(z)
            for a in range(nptr[u], nptr[u + 1]):
                s = exp(qv[a] - vu)
                sig[a] = s
                if s > 0.0:
                    pu += s * qp[a]
                    hu += s * (qh[a] - log(s))
        V[u] = vu
        p[u] = pu
        h[u] = hu
    return env_arr, sig_arr, V_arr, p_arr, h_arr
