"""Built-in correctness checks: the two-variable worked example and the
weighted-form identities.  Used by the ``selftest`` CLI subcommand.
"""

from __future__ import annotations

import numpy as np

from . import losses
from .core import MINIMIZE
from .oracles import Problem, ProblemSpec

TOL = 1e-12

# the four feasible points of the unconstrained two-variable toy problem
TOY_POOL = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
TOY_C = np.array([2.0, -5.0])
TOY_CHAT1 = np.array([-1.0, 1.0])
TOY_CHAT2 = np.array([5.0, -11.0])


def run(verbose: bool = True) -> list[tuple[str, bool, str]]:
    """Returns [(name, passed, detail)] for every check."""
    results = []

    def check(name, got, want, tol=TOL):
        ok = abs(got - want) <= tol
        results.append((name, ok, f"got {got!r}, want {want!r}"))

    spec = ProblemSpec(2, MINIMIZE, [], problem_id="toy2")
    problem = Problem.from_spec(spec)

    from .core import objective_value, regret

    check("objective [0,1] under c", objective_value(np.array([0.0, 1.0]), TOY_C), -5.0)
    check("objective [1,1] under c", objective_value(np.array([1.0, 1.0]), TOY_C), -3.0)

    v_star = problem.solve(TOY_C)
    results.append(("argmin is [0,1]", bool((v_star == [0, 1]).all()), f"got {v_star}"))

    check("regret of second predictor", regret(TOY_CHAT2, TOY_C, problem), 0.0)
    check("regret of first predictor", regret(TOY_CHAT1, TOY_C, problem), 7.0)

    check("mse first", losses.mse(TOY_CHAT1, TOY_C).value, 45.0)
    check("mse second", losses.mse(TOY_CHAT2, TOY_C).value, 45.0)

    check("pointwise first", losses.pointwise(TOY_CHAT1, TOY_C, TOY_POOL).value, 54.0 / 4)
    check("pointwise second", losses.pointwise(TOY_CHAT2, TOY_C, TOY_POOL).value, 54.0 / 4)

    pairs = losses.generate_pairs(TOY_POOL, TOY_C, "best_versus_rest")
    expected_pairs = {(1, 3), (1, 0), (1, 2)}
    results.append((
        "best-versus-rest pairs",
        {tuple(p) for p in pairs.index_pairs} == expected_pairs,
        f"got {pairs.index_pairs.tolist()}",
    ))

    check("pairwise first", losses.pairwise(TOY_CHAT1, TOY_C, pairs, 0.0).value, 4.0 / 3)
    check("pairwise second", losses.pairwise(TOY_CHAT2, TOY_C, pairs, 0.0).value, 0.0)

    # worked pair-difference terms: (2+1)^2, (5+1)^2, (7+2)^2
    check("pairwise-diff first", losses.pairwise_diff(TOY_CHAT1, TOY_C, pairs).value,
          (9.0 + 36.0 + 81.0) / 3)
    check("pairwise-diff second", losses.pairwise_diff(TOY_CHAT2, TOY_C, pairs).value,
          (9.0 + 36.0 + 81.0) / 3)

    check("nce second", losses.nce(TOY_CHAT2, TOY_C, TOY_POOL).value, -8.0)

    rng = np.random.default_rng(0)
    worst_pw = worst_pd = 0.0
    for _ in range(200):
        s, d = int(rng.integers(2, 9)), int(rng.integers(2, 7))
        items = rng.integers(0, 2, size=(s, d)).astype(float)
        c = rng.normal(size=d)
        c_hat = rng.normal(size=d)
        worst_pw = max(worst_pw, abs(
            losses.pointwise(c_hat, c, items).value
            - losses.pointwise_weighted_form(c_hat, c, items)))
        prs = losses.generate_pairs(items, c)
        worst_pd = max(worst_pd, abs(
            losses.pairwise_diff(c_hat, c, prs).value
            - losses.pairwise_diff_weighted_form(c_hat, c, prs)))
    results.append(("pointwise weighted-form identity", worst_pw < 1e-9,
                    f"max abs err {worst_pw:.2e}"))
    results.append(("pairwise-diff weighted-form identity", worst_pd < 1e-9,
                    f"max abs err {worst_pd:.2e}"))

    if verbose:
        for name, ok, detail in results:
            print(f"selftest: {name:<38s} {'PASS' if ok else 'FAIL  ' + detail}")
    return results
