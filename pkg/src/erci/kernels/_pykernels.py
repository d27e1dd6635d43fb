"""Reference backward passes in plain Python.

Every routine sweeps nodes from the last index to the first; the core graph
guarantees successors have larger indices. Arguments follow the CSR layout of
:class:`erci.preprocess.CoreSG`. Node owner codes: 0 ego, 1 env, 2 terminal.
"""
from math import exp, log

import numpy as np

BACKEND = "python"


def _lists(owner, node_ptr, slot_ptr, succ, prob):
    return owner.tolist(), node_ptr.tolist(), slot_ptr.tolist(), succ.tolist(), prob.tolist()


def evaluate(owner, node_ptr, slot_ptr, succ, prob, pol, top):
    """Performance and causal entropy of every node under a joint policy."""
    own, nptr, sptr, suc, pr = _lists(owner, node_ptr, slot_ptr, succ, prob)
    pol = pol.tolist()
    n = len(own)
    p = [0.0] * n
    h = [0.0] * n
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        pu = hu = 0.0
        for a in range(nptr[u], nptr[u + 1]):
            q = pol[a]
            if q <= 0.0:
                continue
            ep = eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                ep += pr[k] * p[suc[k]]
                eh += pr[k] * h[suc[k]]
            pu += q * ep
            hu += q * eh
            if own[u] == 0:
                hu -= q * log(q)
        p[u] = pu
        h[u] = hu
    return np.array(p), np.array(h)


def soft_backward(owner, node_ptr, slot_ptr, succ, prob, envpol, top, lam):
    """Soft Bellman pass at finite rationality ``lam``.

    Returns ``(V, Q, sigma, p, h)``; at env nodes ``sigma`` is ``envpol``.
    """
    own, nptr, sptr, suc, pr = _lists(owner, node_ptr, slot_ptr, succ, prob)
    env = envpol.tolist()
    n, m = len(own), len(sptr) - 1
    V = [0.0] * n
    p = [0.0] * n
    h = [0.0] * n
    Q = [0.0] * m
    sig = [0.0] * m
    V[top] = lam
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        lo, hi = nptr[u], nptr[u + 1]
        qp = [0.0] * (hi - lo)
        qh = [0.0] * (hi - lo)
        for a in range(lo, hi):
            ev = ep = eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                w = pr[k]
                v = suc[k]
                ev += w * V[v]
                ep += w * p[v]
                eh += w * h[v]
            Q[a] = ev
            qp[a - lo] = ep
            qh[a - lo] = eh
        if own[u] == 0:
            top_q = max(Q[lo:hi])
            z = 0.0
            for a in range(lo, hi):
                z += exp(Q[a] - top_q)
            vu = top_q + log(z)
            pu = hu = 0.0
            for a in range(lo, hi):
                s = exp(Q[a] - vu)
                sig[a] = s
                if s > 0.0:
                    pu += s * qp[a - lo]
                    hu += s * (qh[a - lo] - log(s))
        else:
            vu = pu = hu = 0.0
            for a in range(lo, hi):
                s = env[a]
                sig[a] = s
                vu += s * Q[a]
                pu += s * qp[a - lo]
                hu += s * qh[a - lo]
        V[u] = vu
        p[u] = pu
        h[u] = hu
    return np.array(V), np.array(Q), np.array(sig), np.array(p), np.array(h)


def lex_backward(owner, node_ptr, slot_ptr, succ, prob, envpol, top, tol):
    """Infinite-rationality pass: maximise performance, then causal entropy.

    Among actions whose expected performance is within ``tol`` of the best,
    probabilities follow a softmax of the expected entropy-to-go.
    """
    own, nptr, sptr, suc, pr = _lists(owner, node_ptr, slot_ptr, succ, prob)
    env = envpol.tolist()
    n, m = len(own), len(sptr) - 1
    p = [0.0] * n
    h = [0.0] * n
    sig = [0.0] * m
    p[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        lo, hi = nptr[u], nptr[u + 1]
        qp = [0.0] * (hi - lo)
        qh = [0.0] * (hi - lo)
        for a in range(lo, hi):
            ep = eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                ep += pr[k] * p[suc[k]]
                eh += pr[k] * h[suc[k]]
            qp[a - lo] = ep
            qh[a - lo] = eh
        pu = hu = 0.0
        if own[u] == 0:
            best = max(qp)
            hmax = max(qh[i] for i in range(hi - lo) if qp[i] >= best - tol)
            z = 0.0
            for i in range(hi - lo):
                if qp[i] >= best - tol:
                    z += exp(qh[i] - hmax)
            vh = hmax + log(z)
            for i in range(hi - lo):
                if qp[i] >= best - tol:
                    s = exp(qh[i] - vh)
                    sig[lo + i] = s
                    pu += s * qp[i]
                    hu += s * (qh[i] - log(s))
                else:
                    sig[lo + i] = 0.0
        else:
            for a in range(lo, hi):
                s = env[a]
                sig[a] = s
                pu += s * qp[a - lo]
                hu += s * qh[a - lo]
        p[u] = pu
        h[u] = hu
    return np.array(sig), np.array(p), np.array(h)


def min_pass(owner, node_ptr, slot_ptr, succ, prob, egopol, top, coord):
    """Worst case over env policies of one coordinate (0 performance, 1 entropy).

    Returns per-node values and the minimizing deterministic env policy
    (first minimizing slot on ties).
    """
    own, nptr, sptr, suc, pr = _lists(owner, node_ptr, slot_ptr, succ, prob)
    ego = egopol.tolist()
    n, m = len(own), len(sptr) - 1
    val = [0.0] * n
    env = [0.0] * m
    if coord == 0:
        val[top] = 1.0
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        lo, hi = nptr[u], nptr[u + 1]
        if own[u] == 0:
            vu = 0.0
            for a in range(lo, hi):
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
            best = 0
            vu = float("inf")
            for a in range(lo, hi):
                ev = 0.0
                for k in range(sptr[a], sptr[a + 1]):
                    ev += pr[k] * val[suc[k]]
                if ev < vu:
                    vu = ev
                    best = a
            env[best] = 1.0
        val[u] = vu
    return np.array(val), np.array(env)


def min_entropy_pass(owner, node_ptr, slot_ptr, succ, prob, top, lam, tol):
    """Ego plays the rationality-``lam`` soft backup (``lam < 0`` means infinity);
    env picks the action with least expected entropy, then least performance.

    Returns ``(envpol, sigma, V, p, h)`` where ``sigma`` holds ego and env
    probabilities together.
    """
    own, nptr, sptr, suc, pr = _lists(owner, node_ptr, slot_ptr, succ, prob)
    n, m = len(own), len(sptr) - 1
    inf_lam = lam < 0
    V = [0.0] * n
    p = [0.0] * n
    h = [0.0] * n
    sig = [0.0] * m
    env = [0.0] * m
    p[top] = 1.0
    V[top] = 0.0 if inf_lam else lam
    for u in range(n - 1, -1, -1):
        if own[u] == 2:
            continue
        lo, hi = nptr[u], nptr[u + 1]
        k_ = hi - lo
        qv = [0.0] * k_
        qp = [0.0] * k_
        qh = [0.0] * k_
        for a in range(lo, hi):
            ev = ep = eh = 0.0
            for k in range(sptr[a], sptr[a + 1]):
                w = pr[k]
                v = suc[k]
                ev += w * V[v]
                ep += w * p[v]
                eh += w * h[v]
            qv[a - lo] = ev
            qp[a - lo] = ep
            qh[a - lo] = eh
        if own[u] == 1:
            best = 0
            for i in range(1, k_):
                if qh[i] < qh[best] - tol or (qh[i] <= qh[best] + tol and qp[i] < qp[best] - tol):
                    best = i
            env[lo + best] = 1.0
            sig[lo + best] = 1.0
            V[u], p[u], h[u] = qv[best], qp[best], qh[best]
            continue
        pu = hu = 0.0
        if inf_lam:
            bp = max(qp)
            hmax = max(qh[i] for i in range(k_) if qp[i] >= bp - tol)
            z = sum(exp(qh[i] - hmax) for i in range(k_) if qp[i] >= bp - tol)
            vh = hmax + log(z)
            for i in range(k_):
                s = exp(qh[i] - vh) if qp[i] >= bp - tol else 0.0
                sig[lo + i] = s
                if s > 0.0:
                    pu += s * qp[i]
                    hu += s * (qh[i] - log(s))
            vu = vh
        else:
            top_q = max(qv)
            vu = top_q + log(sum(exp(x - top_q) for x in qv))
            for i in range(k_):
                s = exp(qv[i] - vu)
                sig[lo + i] = s
                if s > 0.0:
                    pu += s * qp[i]
                    hu += s * (qh[i] - log(s))
        V[u], p[u], h[u] = vu, pu, hu
    return np.array(env), np.array(sig), np.array(V), np.array(p), np.array(h)
