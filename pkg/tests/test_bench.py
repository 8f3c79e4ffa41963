import numpy as np
import pytest

from diffcd import se3
from diffcd.bench import (
    BenchConfig,
    ContactPoseProblem,
    Estimator,
    contact_cost_and_jacobian,
    estimator_from_name,
    format_quantile_table,
    gauss_newton_solve,
    generate_polyhedral_ellipsoid,
    load_config,
    make_problems,
    quantile_table,
    run_benchmark,
)
from diffcd.errors import DegenerateInput
from diffcd.narrowphase import proximity
from diffcd.shapes import support


def test_polyhedral_ellipsoid_deterministic():
    a = generate_polyhedral_ellipsoid(42)
    b = generate_polyhedral_ellipsoid(42)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.indices, b.indices)
    c = generate_polyhedral_ellipsoid(43)
    assert not np.array_equal(a.vertices, c.vertices)


def test_polyhedral_ellipsoid_vertex_count():
    for seed in range(6):
        mesh = generate_polyhedral_ellipsoid(seed, n_vertices=12)
        assert mesh.vertices.shape == (12, 3)
    assert generate_polyhedral_ellipsoid(0, n_vertices=30).vertices.shape[0] == 30
    with pytest.raises(DegenerateInput):
        generate_polyhedral_ellipsoid(0, n_vertices=3)


def test_polyhedral_ellipsoid_fits_quadric():
    # all vertices satisfy v^T diag(1/a^2) v = 1 for some positive a
    mesh = generate_polyhedral_ellipsoid(5, n_vertices=24)
    V2 = mesh.vertices**2
    coef, res, _, _ = np.linalg.lstsq(V2, np.ones(V2.shape[0]), rcond=None)
    assert np.all(coef > 0)
    assert np.max(np.abs(V2 @ coef - 1.0)) <= 1e-9
    axes = 1.0 / np.sqrt(coef)
    assert np.all(axes >= 0.5 - 1e-9) and np.all(axes <= 1.5 + 1e-9)


def test_make_problems_grid():
    problems = make_problems("rough", 3, 4, master_seed=0)
    assert len(problems) == 12
    assert [p.problem_id for p in problems] == list(range(12))
    again = make_problems("rough", 3, 4, master_seed=0)
    for p, p2 in zip(problems, again):
        assert np.array_equal(p.target1, p2.target1)
        assert np.array_equal(p.q0.translation, p2.q0.translation)
    with pytest.raises(ValueError):
        make_problems("bumpy", 1, 1, 0)


def test_targets_are_boundary_points():
    for p in make_problems("rough", 2, 3, master_seed=1):
        # a support point in some direction: its own support value must match
        for shape, tgt in ((p.shape1, p.target1), (p.shape2, p.target2)):
            d = tgt / np.linalg.norm(tgt)
            assert support(shape, d).value >= float(tgt @ d) - 1e-9
            assert any(np.allclose(v, tgt) for v in shape.vertices)


def test_smooth_suite_targets_on_ellipsoid():
    for p in make_problems("smooth", 2, 2, master_seed=3):
        for shape, tgt in ((p.shape1, p.target1), (p.shape2, p.target2)):
            val = float(np.sum((tgt / shape.semi_axes) ** 2))
            assert val == pytest.approx(1.0, abs=1e-9)


def _perfect_problem(master_seed=0):
    """A problem whose optimum cost is exactly zero: pose the targets onto
    each other with a matching witness pair."""
    problems = make_problems("rough", 1, 1, master_seed)
    return problems[0]


def test_cost_zero_when_witnesses_hit_targets():
    p = _perfect_problem()
    # choose q so that the two targets coincide and are the witness pair:
    # align target2 onto target1 with the shapes on opposite sides
    n = p.target1 / np.linalg.norm(p.target1)
    # rotate shape 2 so its target direction opposes n, then translate
    m = p.target2 / np.linalg.norm(p.target2)
    axis = np.cross(m, -n)
    s = np.linalg.norm(axis)
    c = float(m @ -n)
    if s < 1e-12:
        quat = np.array([0.0, 0, 0, 1]) if c > 0 else np.array([1.0, 0, 0, 0])
    else:
        axis = axis / s
        half = 0.5 * np.arctan2(s, c)
        quat = np.concatenate([axis * np.sin(half), [np.cos(half)]])
    q = se3.Pose(p.target1 - se3.rotate(se3.Pose(np.zeros(3), quat), p.target2), quat)
    prox = proximity(p.shape1, p.shape2, q)
    cost, r, J = contact_cost_and_jacobian(p, q, Estimator(kind="fd", noise=1e-6), prox=prox)
    # the witnesses and targets coincide up to the touching tolerance
    assert abs(prox.signed_distance) <= 1e-5
    assert cost <= 1e-8


def test_cost_independent_of_estimator():
    p = _perfect_problem()
    q = p.q0
    costs = []
    for name in ("fd", "zeroth", "first_gaussian", "first_gumbel"):
        est = estimator_from_name(name)
        cost, r, J = contact_cost_and_jacobian(p, q, est, seed=4)
        costs.append(cost)
        assert J.shape == (9, 6)
        assert r.shape == (9,)
    assert np.allclose(costs, costs[0], rtol=0, atol=0)


def test_cost_jacobian_directional_fd():
    # the fd-estimator Jacobian should predict the cost change along a step
    p = _perfect_problem()
    q = p.q0
    est = Estimator(kind="fd", noise=1e-7)
    cost, r, J = contact_cost_and_jacobian(p, q, est)
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = rng.standard_normal(6)
        z /= np.linalg.norm(z)
        h = 1e-5
        qp = se3.perturb(q, se3.Tangent.from_vector(h * z))
        qm = se3.perturb(q, se3.Tangent.from_vector(-h * z))
        cp = contact_cost_and_jacobian(p, qp, est)[0]
        cm = contact_cost_and_jacobian(p, qm, est)[0]
        pred = float((J.T @ r) @ z)
        got = (cp - cm) / (2 * h)
        assert got == pytest.approx(pred, rel=1e-3, abs=1e-6)


def _sphere_problems(n):
    from diffcd.bench import _random_pose
    from diffcd.shapes import Sphere

    problems = []
    for seed in range(n):
        rng = np.random.default_rng(seed)
        s1, s2 = Sphere(1.0), Sphere(0.8)
        t1 = support(s1, rng.standard_normal(3)).point
        t2 = support(s2, rng.standard_normal(3)).point
        problems.append(ContactPoseProblem(s1, s2, t1, t2, _random_pose(rng, 3.6), seed))
    return problems


def test_gauss_newton_smooth_control():
    # sphere pairs isolate shape roughness from optimizer behavior: the
    # exact and sampling estimators all reach machine-precision cost, while
    # the Monte-Carlo Hessian backend is limited by its sampling floor
    problems = _sphere_problems(6)
    exact_like = (
        Estimator(kind="fd", noise=1e-6),
        Estimator(kind="zeroth", samples=50, noise=1e-2, resample_every=47),
        Estimator(kind="first", backend="analytic"),
    )
    for p in problems:
        for est in exact_like:
            rep = gauss_newton_solve(p, est, max_iters=50, seed=0)
            assert rep.terminal_cost <= 1e-8, (p.problem_id, est.name, rep.terminal_cost)
        rep = gauss_newton_solve(
            p, Estimator(kind="first", backend="gaussian", samples=50, noise=1e-3),
            max_iters=50, seed=0,
        )
        assert rep.terminal_cost <= 1e-2, (p.problem_id, rep.terminal_cost)


def test_gauss_newton_smooth_ellipsoids_analytic():
    # random ellipsoid problems are nonconvex; most converge, the rest are
    # genuine local minima rather than estimator failures
    problems = make_problems("smooth", 10, 4, master_seed=5)
    est = Estimator(kind="first", backend="analytic")
    costs = np.array([
        gauss_newton_solve(p, est, max_iters=50, seed=0).terminal_cost for p in problems
    ])
    assert np.median(costs) <= 1e-8
    assert np.mean(costs <= 1e-8) >= 0.5


def test_gauss_newton_report_shape():
    p = _perfect_problem()
    rep = gauss_newton_solve(p, estimator_from_name("first_gumbel"), max_iters=10, seed=0)
    assert rep.iterations == 10
    assert rep.cost_trace.shape == (11,)
    assert rep.alphas.shape == (10,)
    assert rep.armijo_ok.shape == (10,)
    assert rep.terminal_cost == rep.cost_trace[-1]
    assert rep.wall_time > 0
    # accepted steps never increase the cost (Armijo with slope <= 0)
    for i in range(10):
        if rep.armijo_ok[i]:
            assert rep.cost_trace[i + 1] <= rep.cost_trace[i] + 1e-15
        else:
            assert rep.cost_trace[i + 1] == rep.cost_trace[i]
    # accepted alphas are powers of the backtracking factor
    for a in rep.alphas[rep.armijo_ok]:
        assert a == pytest.approx(0.5 ** round(np.log(a) / np.log(0.5)))


def test_gauss_newton_deterministic():
    p = _perfect_problem()
    est = estimator_from_name("zeroth")
    a = gauss_newton_solve(p, est, max_iters=8, seed=3)
    b = gauss_newton_solve(p, est, max_iters=8, seed=3)
    assert np.array_equal(a.cost_trace, b.cost_trace)
    c = gauss_newton_solve(p, est, max_iters=8, seed=4)
    assert not np.array_equal(a.cost_trace, c.cost_trace)


def test_quantile_table_constant_vector():
    table = quantile_table({"x": [2.0] * 10})
    assert table["x"] == (2.0, 2.0, 2.0, 2.0, 2.0)


def test_quantile_table_monotone(rng):
    vals = rng.uniform(0, 1, size=100)
    (q,) = quantile_table({"e": vals}).values()
    assert list(q) == sorted(q)
    assert q[0] >= vals.min() and q[-1] <= vals.max()


def test_format_quantile_table():
    text = format_quantile_table({"fd": (1e-3, 2e-3, 3e-3, 4e-3, 5e-3)})
    assert "estimator" in text.splitlines()[0]
    assert "fd" in text.splitlines()[1]


def test_run_benchmark_writes_artifacts(tmp_path):
    cfg = BenchConfig(
        suite="rough", pairs=1, targets=2, seed=0,
        estimators=(estimator_from_name("first_gumbel"),),
        output_dir=str(tmp_path), workers=1, max_iters=5, write_traces=True,
    )
    table, reports = run_benchmark(cfg)
    assert len(reports) == 2
    assert set(table) == {"first_gumbel"}
    assert (tmp_path / "reports.csv").exists()
    assert (tmp_path / "quantiles.csv").exists()
    assert (tmp_path / "trace_first_gumbel_0.csv").exists()
    lines = (tmp_path / "reports.csv").read_text().splitlines()
    assert lines[0] == "problem_id,estimator,terminal_cost,iterations,wall_time_s,flags"
    assert len(lines) == 3


def test_run_benchmark_deterministic(tmp_path):
    cfg = BenchConfig(
        suite="rough", pairs=1, targets=2, seed=0,
        estimators=(estimator_from_name("zeroth"),),
        output_dir=str(tmp_path / "a"), workers=1, max_iters=5,
    )
    t1, r1 = run_benchmark(cfg)
    cfg2 = BenchConfig(
        suite="rough", pairs=1, targets=2, seed=0,
        estimators=(estimator_from_name("zeroth"),),
        output_dir=str(tmp_path / "b"), workers=1, max_iters=5,
    )
    t2, r2 = run_benchmark(cfg2)
    assert t1 == t2
    for a, b in zip(r1, r2):
        assert a.terminal_cost == b.terminal_cost
    # CSVs match except the wall-time column
    def strip_wall(text):
        rows = [l.split(",") for l in text.splitlines()]
        return [r[:4] + r[5:] for r in rows]

    csv1 = (tmp_path / "a" / "reports.csv").read_text()
    csv2 = (tmp_path / "b" / "reports.csv").read_text()
    assert strip_wall(csv1) == strip_wall(csv2)


def test_estimator_names_and_lookup():
    assert estimator_from_name("fd").name == "fd_h1e-06"
    assert estimator_from_name("zeroth").name == "zeroth_M50_eps0.01"
    assert estimator_from_name("first_gumbel").name == "first_gumbel"
    assert Estimator(kind="fd", label="custom").name == "custom"
    with pytest.raises(ValueError):
        estimator_from_name("secondorder")
    with pytest.raises(ValueError):
        Estimator(kind="first", backend="magic")._first_backend(0)
    p = _perfect_problem()
    with pytest.raises(ValueError):
        Estimator(kind="third").jacobians(p.shape1, p.shape2, p.q0, None, 0)


def test_load_config(tmp_path):
    path = tmp_path / "bench.toml"
    path.write_text(
        """
[bench]
suite = "smooth"
pairs = 2
targets = 3
seed = 7
estimators = ["fd", "first_gumbel"]
workers = 1
max_iters = 10

[timing]
problems = 4
vertices = 16
warmup = 1
"""
    )
    bcfg, tcfg = load_config(str(path))
    assert bcfg.suite == "smooth"
    assert bcfg.pairs == 2 and bcfg.targets == 3 and bcfg.seed == 7
    assert [e.name for e in bcfg.estimators] == ["fd_h1e-06", "first_gumbel"]
    assert bcfg.max_iters == 10
    assert tcfg.problems == 4 and tcfg.vertices == 16 and tcfg.warmup == 1


def test_moving_target_block():
    # the residual's target term follows the pose: rotating shape 2 about z
    # by 90 degrees moves the world target accordingly
    p = _perfect_problem()
    q = se3.exp(se3.Tangent(np.array([1.0, 0, 0]), np.array([0, 0, np.pi / 2])))
    prox = proximity(p.shape1, p.shape2, q)
    est = Estimator(kind="first", backend="gumbel", noise=1e-4, depth=1)
    cost, r, J = contact_cost_and_jacobian(p, q, est, prox=prox)
    t2_world = se3.apply(q, p.target2)
    assert np.allclose(r[3:6], prox.witness2 - t2_world, atol=1e-14)
    assert np.allclose(r[6:], prox.witness1 - prox.witness2, atol=1e-14)
