"""Contact-pose benchmark: random problems solved by Gauss-Newton with
backtracking line search under each derivative estimator, plus timing runs.

Emits reports.csv (per problem per estimator), quantiles.csv, timings.csv.
Everything is a pure function of the config and master seed.
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import first as first_mod
from . import se3
from .errors import DegenerateInput
from .narrowphase import GjkConfig, proximity
from .shapes import Ellipsoid, Sphere, build_convex_mesh, support
from .zeroth import SmoothingConfig, finite_difference_jacobians, zeroth_order_jacobians

GJK_CFG = GjkConfig()


# ---------------------------------------------------------------------------
# problem generation
# ---------------------------------------------------------------------------


def generate_polyhedral_ellipsoid(seed, n_vertices=12):
    """Convex mesh of points sampled on a random ellipsoid surface.

    Semi-axes are uniform in [0.5, 1.5]; directions are uniform on the sphere
    and projected radially onto the ellipsoid.  Deterministic per seed.
    """
    if n_vertices < 4:
        raise DegenerateInput("need at least 4 vertices")
    for attempt in range(16):
        rng = np.random.default_rng(np.random.SeedSequence([_u32(seed), attempt]))
        axes = rng.uniform(0.5, 1.5, size=3)
        dirs = rng.standard_normal((n_vertices, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        scale = 1.0 / np.sqrt(np.einsum("ij,ij->i", dirs, dirs / axes**2))
        pts = dirs * scale[:, None]
        try:
            mesh = build_convex_mesh(pts)
        except DegenerateInput:
            continue
        if mesh.vertices.shape[0] == n_vertices:
            return mesh
    raise DegenerateInput("could not sample a non-degenerate ellipsoid mesh")


def _u32(x):
    return int(x) & 0xFFFFFFFF


def _random_pose(rng, scale):
    quat = rng.standard_normal(4)
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    return se3.Pose(u * scale, quat)


def _shape_radius(shape):
    if isinstance(shape, Sphere):
        return shape.radius
    if isinstance(shape, Ellipsoid):
        return float(np.max(shape.semi_axes))
    return float(np.max(np.linalg.norm(shape.vertices, axis=1)))


@dataclass(frozen=True)
class ContactPoseProblem:
    shape1: object
    shape2: object
    target1: np.ndarray   # on shape 1's boundary, its local frame
    target2: np.ndarray   # on shape 2's boundary, its local frame
    q0: se3.Pose
    problem_id: int


def make_problems(suite, pairs, targets, master_seed):
    """Problem grid: `pairs` shape pairs x `targets` boundary-point pairs."""
    problems = []
    pid = 0
    for i in range(pairs):
        if suite == "rough":
            s1 = generate_polyhedral_ellipsoid(np.random.SeedSequence([_u32(master_seed), 1, i, 0]).generate_state(1)[0])
            s2 = generate_polyhedral_ellipsoid(np.random.SeedSequence([_u32(master_seed), 1, i, 1]).generate_state(1)[0])
        elif suite == "smooth":
            rng = np.random.default_rng(np.random.SeedSequence([_u32(master_seed), 1, i]))
            s1 = Ellipsoid(rng.uniform(0.5, 1.5, size=3))
            s2 = Ellipsoid(rng.uniform(0.5, 1.5, size=3))
        else:
            raise ValueError("unknown suite %r" % suite)
        radius = 2.0 * (_shape_radius(s1) + _shape_radius(s2))
        for j in range(targets):
            rng = np.random.default_rng(np.random.SeedSequence([_u32(master_seed), 2, i, j]))
            d1 = rng.standard_normal(3)
            d2 = rng.standard_normal(3)
            t1 = support(s1, d1).point
            t2 = support(s2, d2).point
            q0 = _random_pose(rng, radius)
            problems.append(ContactPoseProblem(s1, s2, t1, t2, q0, pid))
            pid += 1
    return problems


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimator:
    """Picklable descriptor of a derivative estimator for the harness."""

    kind: str               # fd | zeroth | first
    backend: str = "analytic"  # for kind == first: analytic | gaussian | gumbel
    samples: int = 50
    noise: float = 1e-2
    depth: int = 1
    # iterations between fresh sample draws; shared draws across consecutive
    # Gauss-Newton steps are common random numbers for the stochastic kinds
    resample_every: int = 1
    label: str = ""

    @property
    def name(self):
        if self.label:
            return self.label
        if self.kind == "fd":
            return "fd_h%g" % self.noise
        if self.kind == "zeroth":
            return "zeroth_M%d_eps%g" % (self.samples, self.noise)
        return "first_%s" % self.backend

    def _first_backend(self, seed):
        if self.backend == "analytic":
            return first_mod.Analytic()
        if self.backend == "gaussian":
            return first_mod.GaussianMC(samples=self.samples, noise=self.noise, seed=seed)
        if self.backend == "gumbel":
            return first_mod.Gumbel(temperature=self.noise, depth=self.depth)
        raise ValueError("unknown first-order backend %r" % self.backend)

    def jacobians(self, shape1, shape2, q, prox, seed):
        if self.kind == "fd":
            return finite_difference_jacobians(shape1, shape2, q, self.noise, GJK_CFG)
        if self.kind == "zeroth":
            # raw score-function form: the harness reproduces the published
            # protocol, which does not use the control variate
            cfg = SmoothingConfig(
                samples=self.samples, noise=self.noise, seed=seed, control_variate=False
            )
            return zeroth_order_jacobians(shape1, shape2, q, cfg, GJK_CFG)
        if self.kind == "first":
            return first_mod.first_order_from_prox(
                shape1, shape2, q, prox, self._first_backend(seed)
            )
        raise ValueError("unknown estimator kind %r" % self.kind)


DEFAULT_ESTIMATORS = (
    Estimator(kind="fd", noise=1e-6),
    Estimator(kind="zeroth", samples=50, noise=1e-2, resample_every=47),
    Estimator(kind="first", backend="gaussian", samples=20, noise=1e-3),
    Estimator(kind="first", backend="gumbel", noise=1e-4, depth=1),
)


def estimator_from_name(name):
    table = {
        "fd": Estimator(kind="fd", noise=1e-6),
        "zeroth": Estimator(kind="zeroth", samples=50, noise=1e-2, resample_every=47),
        "first_analytic": Estimator(kind="first", backend="analytic"),
        "first_gaussian": Estimator(kind="first", backend="gaussian", samples=20, noise=1e-3),
        "first_gumbel": Estimator(kind="first", backend="gumbel", noise=1e-4, depth=1),
    }
    if name not in table:
        raise ValueError("unknown estimator %r (have %s)" % (name, sorted(table)))
    return table[name]


# ---------------------------------------------------------------------------
# cost and Gauss-Newton
# ---------------------------------------------------------------------------


def _residual(problem, q, prox):
    """9-vector: witness-to-target errors for both shapes plus witness gap."""
    t2_world = se3.apply(q, problem.target2)
    return np.concatenate([
        prox.witness1 - problem.target1,
        prox.witness2 - t2_world,
        prox.witness1 - prox.witness2,
    ])


def _cost(r):
    return 0.5 * float(r @ r)


def contact_cost_and_jacobian(problem, q, estimator: Estimator, seed=0, prox=None):
    """Cost, residual stack, and its 9x6 Jacobian under an estimator."""
    if prox is None:
        prox = proximity(problem.shape1, problem.shape2, q, GJK_CFG)
    r = _residual(problem, q, prox)
    jac = estimator.jacobians(problem.shape1, problem.shape2, q, prox, seed)
    # the moving target T(q) x2des also depends on q
    dt2 = np.empty((3, 6))
    R = se3.rotation_matrix(q)
    dt2[:, :3] = R
    dt2[:, 3:] = -R @ se3.skew(problem.target2)
    J = np.vstack([jac.d_w1_dq, jac.d_w2_dq - dt2, jac.d_sep_dq])
    return _cost(r), r, J


@dataclass(frozen=True)
class SolveReport:
    problem_id: int
    estimator: str
    terminal_cost: float
    iterations: int
    cost_trace: np.ndarray
    alphas: np.ndarray
    armijo_ok: np.ndarray
    wall_time: float
    flags: int = 0


def gauss_newton_solve(
    problem, estimator: Estimator, max_iters=50, beta=0.5, armijo_c=1e-4,
    max_backtracks=20, seed=0,
) -> SolveReport:
    """Fixed-iteration Gauss-Newton with Armijo backtracking on SE(3).

    A failed line search accepts a zero step and the loop continues, so the
    iteration budget is always spent and cost traces stay comparable.
    """
    q = problem.q0
    prox = proximity(problem.shape1, problem.shape2, q, GJK_CFG)
    cost = _cost(_residual(problem, q, prox))
    trace = [cost]
    alphas = []
    armijo = []
    flags = 0
    t0 = time.perf_counter()
    for it in range(max_iters):
        window = it // max(estimator.resample_every, 1)
        it_seed = np.random.SeedSequence([_u32(seed), problem.problem_id, window]).generate_state(1)[0]
        cost, r, J = contact_cost_and_jacobian(problem, q, estimator, int(it_seed), prox)
        g = J.T @ r
        M = J.T @ J + 1e-10 * np.eye(6)
        try:
            delta = np.linalg.solve(M, -g)
        except np.linalg.LinAlgError:
            # near-rank-1 Jacobians from non-smooth witnesses can defeat the
            # fixed damping; fall back to a least-squares step
            delta = np.linalg.lstsq(M, -g, rcond=None)[0]
        if not np.isfinite(delta).all():
            delta = np.zeros(6)
        slope = float(g @ delta)
        alpha = 1.0
        accepted = False
        for _ in range(max_backtracks):
            q_try = se3.perturb(q, se3.Tangent.from_vector(alpha * delta))
            prox_try = proximity(problem.shape1, problem.shape2, q_try, GJK_CFG)
            cost_try = _cost(_residual(problem, q_try, prox_try))
            if cost_try <= cost + armijo_c * alpha * slope:
                accepted = True
                break
            alpha *= beta
        if accepted:
            q = q_try
            prox = prox_try
            cost = cost_try
            alphas.append(alpha)
            armijo.append(True)
        else:
            alphas.append(0.0)
            armijo.append(False)
        trace.append(cost)
    wall = time.perf_counter() - t0
    return SolveReport(
        problem_id=problem.problem_id,
        estimator=estimator.name,
        terminal_cost=trace[-1],
        iterations=max_iters,
        cost_trace=np.asarray(trace),
        alphas=np.asarray(alphas),
        armijo_ok=np.asarray(armijo),
        wall_time=wall,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# benchmark driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    suite: str = "rough"
    pairs: int = 20
    targets: int = 20
    seed: int = 0
    estimators: tuple = DEFAULT_ESTIMATORS
    output_dir: str = "bench_out"
    workers: int = 0          # 0: use available parallelism
    max_iters: int = 50
    write_traces: bool = False


QUANTILE_NAMES = ("D1", "Q1", "Median", "Q3", "D9")
QUANTILE_LEVELS = (0.1, 0.25, 0.5, 0.75, 0.9)


def quantile_table(costs_by_estimator):
    """{estimator: (D1, Q1, Median, Q3, D9)} over terminal costs."""
    out = {}
    for name, costs in costs_by_estimator.items():
        out[name] = tuple(float(v) for v in np.quantile(np.asarray(costs), QUANTILE_LEVELS))
    return out


def _solve_one(args):
    problem, estimator, seed, max_iters = args
    return gauss_newton_solve(problem, estimator, max_iters=max_iters, seed=seed)


def _worker_count(config):
    env = os.environ.get("DIFFCOL_THREADS")
    if env:
        return max(1, int(env))
    if config.workers > 0:
        return config.workers
    return os.cpu_count() or 1


def run_benchmark(config: BenchConfig):
    """Solve the whole problem grid per estimator and write CSV artifacts."""
    problems = make_problems(config.suite, config.pairs, config.targets, config.seed)
    jobs = [
        (p, est, config.seed, config.max_iters)
        for est in config.estimators
        for p in problems
    ]
    workers = _worker_count(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_solve_one, jobs, chunksize=4))
    else:
        reports = [_solve_one(j) for j in jobs]
    reports.sort(key=lambda r: (r.estimator, r.problem_id))

    os.makedirs(config.output_dir, exist_ok=True)
    with open(os.path.join(config.output_dir, "reports.csv"), "w", encoding="utf-8") as fh:
        fh.write("problem_id,estimator,terminal_cost,iterations,wall_time_s,flags\n")
        for r in reports:
            fh.write(
                "%d,%s,%.17g,%d,%.17g,%d\n"
                % (r.problem_id, r.estimator, r.terminal_cost, r.iterations, r.wall_time, r.flags)
            )
    if config.write_traces:
        for r in reports:
            path = os.path.join(config.output_dir, "trace_%s_%d.csv" % (r.estimator, r.problem_id))
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("iteration,cost,alpha,armijo_ok\n")
                fh.write("0,%.17g,,\n" % r.cost_trace[0])
                for i in range(len(r.alphas)):
                    fh.write(
                        "%d,%.17g,%.17g,%d\n"
                        % (i + 1, r.cost_trace[i + 1], r.alphas[i], int(r.armijo_ok[i]))
                    )

    costs = {}
    for r in reports:
        costs.setdefault(r.estimator, []).append(r.terminal_cost)
    table = quantile_table(costs)
    with open(os.path.join(config.output_dir, "quantiles.csv"), "w", encoding="utf-8") as fh:
        fh.write("estimator," + ",".join(QUANTILE_NAMES) + "\n")
        for name in sorted(table):
            fh.write(name + "," + ",".join("%.17g" % v for v in table[name]) + "\n")
    return table, reports


def format_quantile_table(table):
    lines = ["%-28s %10s %10s %10s %10s %10s" % (("estimator",) + QUANTILE_NAMES)]
    for name in sorted(table):
        lines.append(
            "%-28s %10.3g %10.3g %10.3g %10.3g %10.3g" % ((name,) + table[name])
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# timing driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimingConfig:
    problems: int = 200
    vertices: int = 100
    seed: int = 0
    estimators: tuple = DEFAULT_ESTIMATORS
    output_dir: str = "bench_out"
    warmup: int = 20


def _timing_cases(config):
    """Mesh-pair poses, roughly half colliding, with solved proximity."""
    cases = []
    for i in range(config.problems):
        rng = np.random.default_rng(np.random.SeedSequence([_u32(config.seed), 7, i]))
        s1 = generate_polyhedral_ellipsoid(
            np.random.SeedSequence([_u32(config.seed), 8, i, 0]).generate_state(1)[0],
            config.vertices,
        )
        s2 = generate_polyhedral_ellipsoid(
            np.random.SeedSequence([_u32(config.seed), 8, i, 1]).generate_state(1)[0],
            config.vertices,
        )
        sep = 0.3 if i % 2 == 0 else 3.5  # alternate colliding / separated
        q = _random_pose(rng, sep)
        prox = proximity(s1, s2, q, GJK_CFG)
        cases.append((s1, s2, q, prox))
    return cases


def run_timings(config: TimingConfig):
    """Median/mean wall time of the derivative computation per estimator.

    First-order estimators are timed from an already-solved proximity result;
    sampling estimators pay for their internal solves, as their protocol
    requires.
    """
    cases = _timing_cases(config)
    rows = []
    for est in config.estimators:
        for colliding in (False, True):
            sel = [c for c in cases if c[3].colliding == colliding]
            times = []
            for k, (s1, s2, q, prox) in enumerate(sel):
                if k < config.warmup:
                    est.jacobians(s1, s2, q, prox, k)
            for k, (s1, s2, q, prox) in enumerate(sel):
                t0 = time.perf_counter()
                est.jacobians(s1, s2, q, prox, k)
                times.append(time.perf_counter() - t0)
            times = np.asarray(times) * 1e6
            rows.append({
                "estimator": est.name,
                "colliding": int(colliding),
                "n": len(times),
                "mean_us": float(times.mean()),
                "std_us": float(times.std()),
                "median_us": float(np.median(times)),
            })
    os.makedirs(config.output_dir, exist_ok=True)
    with open(os.path.join(config.output_dir, "timings.csv"), "w", encoding="utf-8") as fh:
        fh.write("estimator,colliding,n,mean_us,std_us,median_us\n")
        for r in rows:
            fh.write(
                "%s,%d,%d,%.17g,%.17g,%.17g\n"
                % (r["estimator"], r["colliding"], r["n"], r["mean_us"], r["std_us"], r["median_us"])
            )
    return rows


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def load_config(path):
    """TOML config -> (BenchConfig, TimingConfig)."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    bench = data.get("bench", {})
    est_names = bench.get("estimators")
    estimators = (
        tuple(estimator_from_name(n) for n in est_names) if est_names else DEFAULT_ESTIMATORS
    )
    bcfg = BenchConfig(
        suite=bench.get("suite", "rough"),
        pairs=int(bench.get("pairs", 20)),
        targets=int(bench.get("targets", 20)),
        seed=int(bench.get("seed", 0)),
        estimators=estimators,
        output_dir=bench.get("output_dir", "bench_out"),
        workers=int(bench.get("workers", 0)),
        max_iters=int(bench.get("max_iters", 50)),
        write_traces=bool(bench.get("write_traces", False)),
    )
    timing = data.get("timing", {})
    t_names = timing.get("estimators")
    t_est = tuple(estimator_from_name(n) for n in t_names) if t_names else DEFAULT_ESTIMATORS
    tcfg = TimingConfig(
        problems=int(timing.get("problems", 200)),
        vertices=int(timing.get("vertices", 100)),
        seed=int(timing.get("seed", 0)),
        estimators=t_est,
        output_dir=timing.get("output_dir", bcfg.output_dir),
        warmup=int(timing.get("warmup", 20)),
    )
    return bcfg, tcfg
