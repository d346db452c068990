import numpy as np
import pytest

from rankopt.core import objective_value
from rankopt.oracles import (
    Constraint,
    GridSpec,
    InfeasibleError,
    Problem,
    ProblemSpec,
    build_matching_spec,
    build_scheduling_spec,
    enumerate_feasible,
    enumerate_grid_paths,
    load_problem,
    save_problem,
    solve,
    solve_grid_shortest_path,
    solve_stats,
)

from conftest import dyadic


def brute_force(spec, c):
    """Reference optimum under the earliest-selection tie rule: among tied
    optima keep the one that is 1 at the first differing coordinate (the last
    tied point in ascending enumeration order)."""
    pts = enumerate_feasible(spec)
    if not pts:
        return None
    sigma = 1.0 if spec.sense == "minimize" else -1.0
    best = None
    best_obj = np.inf
    for v in pts:
        obj = sigma * float(np.dot(c, v))
        if obj <= best_obj:
            best_obj, best = obj, v
    return best


def random_spec(rng, k=None):
    k = k or int(rng.integers(2, 11))
    cons = []
    for _ in range(int(rng.integers(0, 4))):
        coeffs = dyadic(rng, k, scale=4)
        cmp = ["<=", ">=", "=="][int(rng.integers(0, 3))]
        bound = float(dyadic(rng, (), scale=2 * k))
        cons.append(Constraint(coeffs, cmp, bound))
    sense = "minimize" if rng.random() < 0.7 else "maximize"
    try:
        return ProblemSpec(k, sense, cons)
    except InfeasibleError:
        return None


class TestSolve:
    def test_unconstrained_example(self):
        spec = ProblemSpec(2, "minimize", [])
        assert solve(spec, [2.0, -5.0]).tolist() == [0.0, 1.0]

    def test_only_feasible_point(self):
        spec = ProblemSpec(2, "minimize", [Constraint(np.ones(2), "<=", 0.0)])
        assert solve(spec, [-1.0, -1.0]).tolist() == [0.0, 0.0]

    def test_against_enumeration_random(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 60:
            spec = random_spec(rng)
            if spec is None:
                continue
            c = dyadic(rng, spec.dimension)
            x = solve(spec, c)
            ref = brute_force(spec, c)
            assert (x == ref).all(), f"{x} vs {ref}"
            checked += 1

    def test_earliest_selection_tie_break(self):
        # every point ties: prefer 1 at the first differing coordinate
        spec = ProblemSpec(2, "minimize", [])
        assert solve(spec, [0.0, 0.0]).tolist() == [1.0, 1.0]
        # forced at least one selected, equal costs: earliest index selected
        spec = ProblemSpec(2, "minimize", [Constraint(np.ones(2), ">=", 1.0)])
        assert solve(spec, [3.0, 3.0]).tolist() == [1.0, 0.0]
        # strictly positive costs: ties broken, zero stays preferred
        spec = ProblemSpec(2, "minimize", [])
        assert solve(spec, [1.0, 1.0]).tolist() == [0.0, 0.0]

    def test_infeasible(self):
        spec = ProblemSpec(2, "minimize",
                           [Constraint(np.ones(2), ">=", 3.0)], validate=False)
        with pytest.raises(InfeasibleError):
            solve(spec, [1.0, 1.0])
        with pytest.raises(InfeasibleError):
            ProblemSpec(2, "minimize", [Constraint(np.ones(2), ">=", 3.0)])

    def test_non_finite_cost_rejected(self):
        spec = ProblemSpec(2, "minimize", [])
        with pytest.raises(ValueError):
            solve(spec, [np.inf, 0.0])

    def test_node_count_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            spec = random_spec(rng)
            if spec is None:
                continue
            c = dyadic(rng, spec.dimension)
            _, nodes = solve_stats(spec, c)
            assert nodes <= 2 ** (spec.dimension + 1)


class TestEnumerateFeasible:
    def test_unconstrained_two_vars(self):
        spec = ProblemSpec(2, "minimize", [])
        pts = [p.tolist() for p in enumerate_feasible(spec)]
        assert pts == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_infeasible_empty(self):
        spec = ProblemSpec(2, "minimize",
                           [Constraint(np.ones(2), ">=", 3.0)], validate=False)
        assert enumerate_feasible(spec) == []

    def test_refuses_large_without_limit(self):
        spec = ProblemSpec(30, "minimize", [])
        with pytest.raises(ValueError):
            enumerate_feasible(spec)
        assert len(enumerate_feasible(spec, limit=5)) == 5

    def test_grid_flow_count(self):
        # 3x3 grid flow constraints admit exactly C(4,2)=6 paths
        spec = GridSpec(3).to_problem_spec()
        assert len(enumerate_feasible(spec)) == 6


class TestGridShortestPath:
    def test_all_ones_objective(self):
        grid = GridSpec(5)
        x = solve_grid_shortest_path(grid, np.ones(grid.num_edges))
        assert objective_value(x, np.ones(grid.num_edges)) == 8.0

    def test_two_by_two_picks_cheaper(self):
        grid = GridSpec(2)
        ids = grid.edge_index()
        c = np.zeros(4)
        c[ids[(0, 0, "E")]] = 5.0  # east-then-north costs 6
        c[ids[(0, 1, "N")]] = 1.0
        c[ids[(0, 0, "N")]] = 1.0  # north-then-east costs 2
        c[ids[(1, 0, "E")]] = 1.0
        x = solve_grid_shortest_path(grid, c)
        assert x[ids[(0, 0, "N")]] == 1.0 and x[ids[(1, 0, "E")]] == 1.0

    def test_against_path_enumeration(self):
        grid = GridSpec(3)
        paths = enumerate_grid_paths(grid)
        assert len(paths) == 6
        rng = np.random.default_rng(2)
        for _ in range(150):
            c = dyadic(rng, grid.num_edges, scale=8)
            x = solve_grid_shortest_path(grid, c)
            objs = paths @ c
            best = objs.min()
            assert np.dot(c, x) == best
            # earliest-selection optimum: last optimal path in ascending
            # bit-vector order
            opt = paths[objs == best]
            expect = opt[np.lexsort(opt.T[::-1])][-1]
            assert (x == expect).all()

    def test_flow_conservation_and_edge_count(self):
        grid = GridSpec(4)
        spec = grid.to_problem_spec()
        rng = np.random.default_rng(9)
        for _ in range(25):
            c = rng.uniform(0.1, 4.0, grid.num_edges)
            x = solve_grid_shortest_path(grid, c)
            assert x.sum() == 2 * (grid.n - 1)
            assert spec.check(x)

    def test_matches_branch_and_bound_on_flow_spec(self):
        grid = GridSpec(3)
        spec = grid.to_problem_spec()
        rng = np.random.default_rng(21)
        for _ in range(40):
            c = dyadic(rng, grid.num_edges, scale=4)
            assert (solve_grid_shortest_path(grid, c) == solve(spec, c)).all()


class TestMatchingSpec:
    def test_plain_matching_when_rates_zero(self):
        m = np.ones((2, 3))
        spec = build_matching_spec(2, 3, m, 0.0, 0.0)
        assert spec.sense == "maximize"
        assert spec.dimension == 6
        # rate rows are vacuous: every assignment satisfying degrees passes
        pts = enumerate_feasible(spec)
        degree_only = ProblemSpec(6, "maximize", spec.constraints[:-2])
        assert len(pts) == len(enumerate_feasible(degree_only))

    def test_identity_fields_similarity_one(self):
        m = np.eye(3)
        spec = build_matching_spec(3, 3, m, 1.0, 0.0)
        rng = np.random.default_rng(4)
        for _ in range(25):
            c = dyadic(rng, 9, scale=4)
            x = solve(spec, c)
            ref = brute_force(spec, c)
            assert (x == ref).all()
            # p=1 forbids any cross-field edge
            assert all(x[i * 3 + j] == 0.0 for i in range(3) for j in range(3)
                       if i != j)

    def test_paper_shaped_rates_constructible(self):
        m = (np.arange(16).reshape(4, 4) % 2).astype(float)
        for rate in (0.25, 0.05):
            spec = build_matching_spec(4, 4, m, rate, rate)
            assert spec.dimension == 16

    def test_rate_bounds_validated(self):
        with pytest.raises(ValueError):
            build_matching_spec(2, 2, np.zeros((2, 2)), -0.1, 0.0)


class TestSchedulingSpec:
    def test_three_start_example(self):
        # 1 task, 1 machine, duration 2, horizon 4, prices [1,9,9,1]:
        # start costs are 10, 18, 10 -> earliest of the tied starts wins
        spec, tf = build_scheduling_spec(
            durations=[2], windows=[(0, 4)], power=[1.0],
            resource_usages=np.ones((1, 1)), capacities=np.ones((1, 1)),
            machines=1, timeslots=4)
        prices = np.array([1.0, 9.0, 9.0, 1.0])
        x = solve(spec, tf @ prices)
        assert x.tolist() == [1.0, 0.0, 0.0, 0.0]
        assert objective_value(tf.T @ x, prices) == 10.0

    def test_forced_single_start(self):
        spec, tf = build_scheduling_spec(
            durations=[3], windows=[(1, 4)], power=[2.0],
            resource_usages=np.ones((1, 1)), capacities=np.ones((1, 1)),
            machines=1, timeslots=6)
        starts = [t for t in range(6) if any(tf[t] > 0)]
        assert starts == [1]

    def test_zero_capacity_infeasible(self):
        with pytest.raises(InfeasibleError):
            build_scheduling_spec(
                durations=[2], windows=[(0, 4)], power=[1.0],
                resource_usages=np.ones((1, 1)), capacities=np.zeros((1, 1)),
                machines=1, timeslots=4)

    def test_image_is_power_weighted_occupancy(self):
        spec, tf = build_scheduling_spec(
            durations=[2, 1], windows=[(0, 4), (0, 4)], power=[3.0, 2.0],
            resource_usages=np.ones((2, 1)), capacities=np.full((2, 1), 2.0),
            machines=2, timeslots=4)
        prices = np.array([4.0, 1.0, 2.0, 8.0])
        x = solve(spec, tf @ prices)
        img = tf.T @ x
        assert img.sum() == 3.0 * 2 + 2.0 * 1
        assert (img >= 0).all()
        # objective through the image equals the ILP objective
        assert objective_value(img, prices) == float((tf @ prices) @ x)

    def test_capacity_respected_against_enumeration(self):
        spec, tf = build_scheduling_spec(
            durations=[2, 2], windows=[(0, 4), (0, 4)], power=[1.0, 1.0],
            resource_usages=np.ones((2, 1)), capacities=np.ones((1, 1)),
            machines=1, timeslots=4)
        rng = np.random.default_rng(8)
        for _ in range(10):
            prices = np.maximum(dyadic(rng, 4, scale=4), 0.25)
            x = solve(spec, tf @ prices)
            ref = brute_force(spec, tf @ prices)
            assert (x == ref).all()

    def test_full_horizon_constructible(self):
        spec, tf = build_scheduling_spec(
            durations=[2], windows=[(0, 48)], power=[1.0],
            resource_usages=np.ones((1, 1)), capacities=np.ones((1, 1)),
            machines=1, timeslots=48)
        assert spec.dimension == 48
        assert tf.shape == (48, 48)


class TestProblemSerialization:
    def test_generic_round_trip(self, tmp_path):
        spec = ProblemSpec(
            3, "maximize",
            [Constraint(np.array([1.0, 2.0, -1.5]), "<=", 2.25)],
            problem_id="demo", meta={"kind": "generic"})
        path = tmp_path / "p.json"
        save_problem(Problem.from_spec(spec), path)
        back = load_problem(path)
        assert back.spec.dimension == 3
        assert back.spec.sense == "maximize"
        assert back.spec.problem_id == "demo"
        con = back.spec.constraints[0]
        assert con.coeffs.tolist() == [1.0, 2.0, -1.5]
        assert con.cmp == "<=" and con.rhs == 2.25

    def test_grid_round_trip(self, tmp_path):
        problem = Problem.for_grid(GridSpec(3))
        path = tmp_path / "grid.json"
        save_problem(problem, path)
        back = load_problem(path)
        assert back.grid is not None and back.grid.n == 3
        c = np.arange(back.grid.num_edges, dtype=float)
        assert (back.solve(c) == problem.solve(c)).all()

    def test_scheduling_round_trip(self, tmp_path):
        spec, tf = build_scheduling_spec(
            durations=[2], windows=[(0, 4)], power=[1.5],
            resource_usages=np.ones((1, 1)), capacities=np.ones((1, 1)),
            machines=1, timeslots=4)
        problem = Problem.for_scheduling(spec, tf)
        path = tmp_path / "sched.json"
        save_problem(problem, path)
        back = load_problem(path)
        assert back.predict_dim == 4
        prices = np.array([1.0, 9.0, 9.0, 1.0])
        assert (back.solve(prices) == problem.solve(prices)).all()
        assert (back.transform == tf).all()
