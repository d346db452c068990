# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pool losses, grid DP, branch and bound.

Semantics mirror rankopt._fallback exactly (tie-breaking, node order,
normalisation).  Keep the two in sync.
"""

from libc.math cimport exp, log, INFINITY

import numpy as np

NAME = "compiled"

CMP_LE = -1
CMP_EQ = 0
CMP_GE = 1

BNB_OPTIMAL = 0
BNB_INFEASIBLE = 1

cdef double EPS = 1e-9


def pointwise_loss(const double[:, ::1] items, const double[::1] c_hat, const double[::1] c):
    cdef Py_ssize_t n = items.shape[0], d = items.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, val = 0.0
    grad_arr = np.zeros(d)
    cdef double[::1] grad = grad_arr
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += items[i, j] * (c_hat[j] - c[j])
        val += acc * acc
        for j in range(d):
            grad[j] += acc * items[i, j]
    for j in range(d):
        grad[j] *= 2.0 / n
    return val / n, grad_arr


def nce_loss(const double[:, ::1] items, const double[::1] c_hat, Py_ssize_t best):
    cdef Py_ssize_t n = items.shape[0], d = items.shape[1]
    cdef Py_ssize_t i, j
    cdef double val = 0.0
    grad_arr = np.zeros(d)
    cdef double[::1] grad = grad_arr
    for j in range(d):
        grad[j] = items[best, j]
    for i in range(n):
        for j in range(d):
            grad[j] -= items[i, j] / n
    for j in range(d):
        val += grad[j] * c_hat[j]
    return val, grad_arr


def hinge_pair_loss(const double[:, ::1] items, const double[::1] c_hat,
                    const long[:, ::1] pairs, double margin):
    cdef Py_ssize_t npairs = pairs.shape[0], d = items.shape[1]
    cdef Py_ssize_t t, j, p, q
    cdef double arg, val = 0.0
    grad_arr = np.zeros(d)
    cdef double[::1] grad = grad_arr
    if npairs == 0:
        return 0.0, grad_arr
    for t in range(npairs):
        p = pairs[t, 0]
        q = pairs[t, 1]
        arg = margin
        for j in range(d):
            arg += (items[p, j] - items[q, j]) * c_hat[j]
        if arg > 0.0:
            val += arg
            for j in range(d):
                grad[j] += items[p, j] - items[q, j]
    for j in range(d):
        grad[j] /= npairs
    return val / npairs, grad_arr


def square_pair_loss(const double[:, ::1] items, const double[::1] c_hat,
                     const double[::1] c, const long[:, ::1] pairs, double denom):
    cdef Py_ssize_t npairs = pairs.shape[0], d = items.shape[1]
    cdef Py_ssize_t t, j, p, q
    cdef double r, val = 0.0
    grad_arr = np.zeros(d)
    cdef double[::1] grad = grad_arr
    if npairs == 0:
        return 0.0, grad_arr
    for t in range(npairs):
        p = pairs[t, 0]
        q = pairs[t, 1]
        r = 0.0
        for j in range(d):
            r += (items[p, j] - items[q, j]) * (c_hat[j] - c[j])
        val += r * r
        for j in range(d):
            grad[j] += r * (items[p, j] - items[q, j])
    for j in range(d):
        grad[j] *= 2.0 / denom
    return val / denom, grad_arr


def softmax_pool(const double[:, ::1] items, const double[::1] c, double tau):
    cdef Py_ssize_t n = items.shape[0], d = items.shape[1]
    cdef Py_ssize_t i, j
    cdef double smax = -INFINITY, tot = 0.0, s
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += items[i, j] * c[j]
        s = -s / tau
        out[i] = s
        if s > smax:
            smax = s
    for i in range(n):
        out[i] = exp(out[i] - smax)
        tot += out[i]
    for i in range(n):
        out[i] /= tot
    return out_arr


def listwise_loss(const double[:, ::1] items, const double[::1] c_hat,
                  const double[::1] c, double tau):
    cdef Py_ssize_t n = items.shape[0], d = items.shape[1]
    cdef Py_ssize_t i, j
    cdef double smax = -INFINITY, tot = 0.0, s, val = 0.0
    p_arr = softmax_pool(items, c, tau)
    cdef double[::1] p = p_arr
    logq_arr = np.empty(n)
    cdef double[::1] logq = logq_arr
    grad_arr = np.zeros(d)
    cdef double[::1] grad = grad_arr
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += items[i, j] * c_hat[j]
        s = -s / tau
        logq[i] = s
        if s > smax:
            smax = s
    for i in range(n):
        tot += exp(logq[i] - smax)
    tot = log(tot)
    for i in range(n):
        logq[i] = (logq[i] - smax) - tot
        val -= p[i] * logq[i]
        s = p[i] - exp(logq[i])
        for j in range(d):
            grad[j] += s * items[i, j]
    for j in range(d):
        grad[j] /= n * tau
    return val / n, grad_arr


def grid_shortest_path(int n, const double[::1] costs):
    cdef Py_ssize_t i, j, k = 0
    east_arr = np.full((n, n), -1, dtype=np.int64)
    north_arr = np.full((n, n), -1, dtype=np.int64)
    cdef long[:, ::1] east = east_arr
    cdef long[:, ::1] north = north_arr
    for i in range(n):
        for j in range(n):
            if j + 1 < n:
                east[i, j] = k
                k += 1
            if i + 1 < n:
                north[i, j] = k
                k += 1
    g_arr = np.zeros((n, n))
    cdef double[:, ::1] g = g_arr
    cdef double best, cand
    for i in range(n - 1, -1, -1):
        for j in range(n - 1, -1, -1):
            if i == n - 1 and j == n - 1:
                continue
            best = INFINITY
            if j + 1 < n:
                best = costs[east[i, j]] + g[i, j + 1]
            if i + 1 < n:
                cand = costs[north[i, j]] + g[i + 1, j]
                if cand < best:
                    best = cand
            g[i, j] = best
    x_arr = np.zeros(k)
    cdef double[::1] x = x_arr
    i = 0
    j = 0
    while i != n - 1 or j != n - 1:
        if i == n - 1:
            x[east[i, j]] = 1.0
            j += 1
        elif j == n - 1:
            x[north[i, j]] = 1.0
            i += 1
        elif costs[north[i, j]] + g[i + 1, j] < costs[east[i, j]] + g[i, j + 1]:
            x[north[i, j]] = 1.0
            i += 1
        else:
            x[east[i, j]] = 1.0
            j += 1
    return x_arr


def bnb_solve(const double[::1] coeffs, const double[:, ::1] a,
              const signed char[::1] ops, const double[::1] rhs,
              long node_limit=0):
    cdef Py_ssize_t k = coeffs.shape[0], m = rhs.shape[0]
    cdef Py_ssize_t i, j, depth, top
    cdef int val, op
    cdef double obj, lo, hi
    cdef long nodes = 0
    cdef bint found = False, ok

    neg_tail_arr = np.zeros(k + 1)
    cdef double[::1] neg_tail = neg_tail_arr
    lo_tail_arr = np.zeros((k + 1, m))
    hi_tail_arr = np.zeros((k + 1, m))
    cdef double[:, ::1] lo_tail = lo_tail_arr
    cdef double[:, ::1] hi_tail = hi_tail_arr
    cdef double cj
    for j in range(k - 1, -1, -1):
        neg_tail[j] = neg_tail[j + 1] + min(0.0, coeffs[j])
        for i in range(m):
            cj = a[i, j]
            lo_tail[j, i] = lo_tail[j + 1, i] + min(cj, 0.0)
            hi_tail[j, i] = hi_tail[j + 1, i] + max(cj, 0.0)

    x_arr = np.zeros(k, dtype=np.int8)
    best_arr = np.zeros(k, dtype=np.int8)
    cdef signed char[::1] x = x_arr
    cdef signed char[::1] best_x = best_arr
    cdef double best_obj = INFINITY

    # explicit DFS stack; at most 2 entries pushed per level
    cdef Py_ssize_t cap = 2 * k + 2
    stack_depth_arr = np.zeros(cap, dtype=np.int64)
    stack_val_arr = np.zeros(cap, dtype=np.int8)
    stack_obj_arr = np.zeros(cap)
    stack_lhs_arr = np.zeros((cap, m))
    cdef long[::1] stack_depth = stack_depth_arr
    cdef signed char[::1] stack_val = stack_val_arr
    cdef double[::1] stack_obj = stack_obj_arr
    cdef double[:, ::1] stack_lhs = stack_lhs_arr
    cdef double[::1] lhs
    lhs_arr = np.zeros(m)
    lhs = lhs_arr

    top = 0
    stack_depth[0] = 0
    stack_val[0] = -1
    stack_obj[0] = 0.0
    top = 1

    while top > 0:
        top -= 1
        depth = stack_depth[top]
        val = stack_val[top]
        obj = stack_obj[top]
        for i in range(m):
            lhs[i] = stack_lhs[top, i]
        if val >= 0:
            x[depth] = val
            if val == 1:
                obj += coeffs[depth]
                for i in range(m):
                    lhs[i] += a[i, depth]
            depth += 1
        nodes += 1
        if node_limit and nodes > node_limit:
            break
        if obj + neg_tail[depth] >= best_obj:
            continue
        ok = True
        for i in range(m):
            lo = lhs[i] + lo_tail[depth, i]
            hi = lhs[i] + hi_tail[depth, i]
            op = ops[i]
            if op == -1 and lo > rhs[i] + EPS:
                ok = False
                break
            if op == 1 and hi < rhs[i] - EPS:
                ok = False
                break
            if op == 0 and (lo > rhs[i] + EPS or hi < rhs[i] - EPS):
                ok = False
                break
        if not ok:
            continue
        if depth == k:
            if obj < best_obj:
                best_obj = obj
                for j in range(k):
                    best_x[j] = x[j]
                found = True
            continue
        # push the 0-branch first so the 1-branch pops first
        stack_depth[top] = depth
        stack_val[top] = 0
        stack_obj[top] = obj
        for i in range(m):
            stack_lhs[top, i] = lhs[i]
        top += 1
        stack_depth[top] = depth
        stack_val[top] = 1
        stack_obj[top] = obj
        for i in range(m):
            stack_lhs[top, i] = lhs[i]
        top += 1

    if not found:
        return BNB_INFEASIBLE, np.zeros(k), nodes
    return BNB_OPTIMAL, best_arr.astype(np.float64), nodes
