"""Pure-numpy implementations of the hot kernels.

These mirror the compiled extension (``rankopt._kernels``) exactly and are
selected at import time when the extension is unavailable or when
``RANKOPT_PURE_PYTHON=1`` is set.  Semantics, tie-breaking and iteration
order are identical between the two backends.
"""

import numpy as np

NAME = "python"

# comparator codes shared with the compiled kernels
CMP_LE = -1
CMP_EQ = 0
CMP_GE = 1

# feasibility slack for constraint evaluation
EPS = 1e-9

# branch-and-bound status codes
BNB_OPTIMAL = 0
BNB_INFEASIBLE = 1


def pointwise_loss(items, c_hat, c):
    """Mean squared objective-value error over the pool.

    value = (1/S) * sum_v ((c_hat - c) @ v)^2
    grad  = -(2/S) * sum_v ((c - c_hat) @ v) v
    """
    n = items.shape[0]
    d = items @ (c_hat - c)
    value = float(d @ d) / n
    grad = (2.0 / n) * (d @ items)
    return value, grad


def nce_loss(items, c_hat, best):
    """Mean predicted-objective gap between the pool best and each member."""
    n = items.shape[0]
    diff = items[best] - items.mean(axis=0)
    value = float(diff @ c_hat)
    return value, diff.copy()


def hinge_pair_loss(items, c_hat, pairs, margin):
    """Margin ranking loss over ordered index pairs.

    Pairs with hinge argument exactly 0 are inactive (no subgradient
    contribution).  Empty pair sets yield (0, zeros).
    """
    d = items.shape[1]
    if len(pairs) == 0:
        return 0.0, np.zeros(d)
    diff = items[pairs[:, 0]] - items[pairs[:, 1]]
    args = margin + diff @ c_hat
    active = args > 0.0
    value = float(args[active].sum()) / len(pairs)
    grad = diff[active].sum(axis=0) / len(pairs) if active.any() else np.zeros(d)
    return value, grad


def square_pair_loss(items, c_hat, c, pairs, denom):
    """Squared error of predicted vs true objective differences over pairs.

    ``denom`` is the normalisation constant (number of pairs, or pool size
    under the alternate convention).
    """
    d = items.shape[1]
    if len(pairs) == 0:
        return 0.0, np.zeros(d)
    diff = items[pairs[:, 0]] - items[pairs[:, 1]]
    r = diff @ (c_hat - c)
    value = float(r @ r) / denom
    grad = (2.0 / denom) * (r @ diff)
    return value, grad


def softmax_pool(items, c, tau):
    """Stable softmax of -objective/tau over the pool rows."""
    s = -(items @ c) / tau
    s -= s.max()
    p = np.exp(s)
    p /= p.sum()
    return p


def listwise_loss(items, c_hat, c, tau):
    """Cross entropy between the pool softmax under c and under c_hat,
    scaled by 1/S.
    """
    n = items.shape[0]
    p = softmax_pool(items, c, tau)
    s = -(items @ c_hat) / tau
    smax = s.max()
    logq = (s - smax) - np.log(np.exp(s - smax).sum())
    q = np.exp(logq)
    value = float(-(p @ logq)) / n
    grad = (p @ items - q @ items) / (n * tau)
    return value, grad


def grid_shortest_path(n, costs):
    """Min-cost monotone (east/north) path on an n x n grid.

    Edge k for node (i, j) in row-major order: east edge first, then north.
    Ties prefer the east move, matching the solver-wide earliest-selection
    tie rule under this numbering.
    """
    east = np.full((n, n), -1, dtype=np.int64)
    north = np.full((n, n), -1, dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(n):
            if j + 1 < n:
                east[i, j] = k
                k += 1
            if i + 1 < n:
                north[i, j] = k
                k += 1
    # cost-to-go from each node to the northeast corner
    g = np.zeros((n, n))
    for i in range(n - 1, -1, -1):
        for j in range(n - 1, -1, -1):
            if i == n - 1 and j == n - 1:
                continue
            best = np.inf
            if j + 1 < n:
                best = costs[east[i, j]] + g[i, j + 1]
            if i + 1 < n:
                cand = costs[north[i, j]] + g[i + 1, j]
                if cand < best:  # ties stay east
                    best = cand
            g[i, j] = best
    x = np.zeros(k)
    i = j = 0
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
    return x


def bnb_solve(coeffs, a, ops, rhs, node_limit=0):
    """Depth-first branch and bound for min c@x over binary x, A x (op) rhs.

    Branches in natural index order, 1 before 0, accepting an incumbent only
    on strict improvement, so among optima the returned assignment selects
    the earliest variables (it is 1 at the first coordinate on which tied
    optima differ).  Bound: fixed cost plus sum(min(0, c_j)) over free
    variables.  Constraint pruning: interval of achievable LHS against the
    comparator.

    Returns (status, x, nodes_visited).
    """
    k = len(coeffs)
    m = len(rhs)
    neg_tail = np.zeros(k + 1)
    for j in range(k - 1, -1, -1):
        neg_tail[j] = neg_tail[j + 1] + min(0.0, coeffs[j])
    # remaining-range tails per constraint: sum of negative / positive coefs at inds >= j
    lo_tail = np.zeros((k + 1, m))
    hi_tail = np.zeros((k + 1, m))
    for j in range(k - 1, -1, -1):
        cj = a[:, j]
        lo_tail[j] = lo_tail[j + 1] + np.minimum(cj, 0.0)
        hi_tail[j] = hi_tail[j + 1] + np.maximum(cj, 0.0)

    x = np.zeros(k, dtype=np.int8)
    best_x = np.zeros(k, dtype=np.int8)
    best_obj = np.inf
    found = False
    nodes = 0

    def feasible_range(depth, lhs):
        # can constraints still be met given fixed prefix LHS?
        for i in range(m):
            lo = lhs[i] + lo_tail[depth, i]
            hi = lhs[i] + hi_tail[depth, i]
            op = ops[i]
            if op == CMP_LE and lo > rhs[i] + EPS:
                return False
            if op == CMP_GE and hi < rhs[i] - EPS:
                return False
            if op == CMP_EQ and (lo > rhs[i] + EPS or hi < rhs[i] - EPS):
                return False
        return True

    # iterative DFS: stack of (depth, value, obj, lhs)
    stack = [(0, -1, 0.0, np.zeros(m))]
    while stack:
        depth, val, obj, lhs = stack.pop()
        if val >= 0:
            x[depth] = val
            if val == 1:
                obj = obj + coeffs[depth]
                lhs = lhs + a[:, depth]
            depth += 1
        nodes += 1
        if node_limit and nodes > node_limit:
            break
        if obj + neg_tail[depth] >= best_obj:
            continue
        if not feasible_range(depth, lhs):
            continue
        if depth == k:
            if obj < best_obj:
                best_obj = obj
                best_x[:] = x
                found = True
            continue
        # push 0-branch first so the 1-branch is explored first
        stack.append((depth, 0, obj, lhs))
        stack.append((depth, 1, obj, lhs))

    if not found:
        return BNB_INFEASIBLE, np.zeros(k), nodes
    return BNB_OPTIMAL, best_x.astype(np.float64), nodes
