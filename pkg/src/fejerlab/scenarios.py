"""Built-in experiment scenarios, parameter sweeps, and the scenario runner.

A scenario is declarative: named sets, named operator expressions, trajectory
definitions, and an ordered list of checks with expected verdicts.  A check
whose ``expect`` is None is evidence-only: its outcome is recorded but never
counted as a mismatch (used for the open exploratory questions, where a
convergence verdict would overclaim).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.stats

from .analysis import (
    check_asymptotic_regularity,
    check_cluster_orthogonality,
    check_codim1_theorem,
    check_connectivity,
    check_fejer,
    check_shadow_superset,
    check_sum_decoupling,
    estimate_cluster_set,
)
from .dynamics import (
    CONVERGED,
    Trajectory,
    detect_limit,
    difference_monotonicity_slack,
    difference_orbit,
    displacement_from_orbit,
    iterate,
    normalized_from_raw,
    normalized_orbit,
    shadow,
    two_ball_displacement,
)
from .errors import ConfigError
from .geometry import (
    Ball,
    ConvexSet,
    Hyperplane,
    LinearSubspace,
    Orthant,
    Point,
    Ray,
)
from .operators import (
    AffineMap,
    ConvexCombination,
    DouglasRachford,
    Identity,
    Negation,
    Reflector,
    ScalarPiecewiseLinear,
    Translation,
    fixed_set_description,
    random_scalar_piecewise_linear,
    verify_nonexpansive,
)
from .report import FAIL, PASS, DiagnosticsReport

__all__ = [
    "TrajectoryDef",
    "CheckDef",
    "ScenarioSpec",
    "CheckOutcome",
    "RunArtifacts",
    "alternating_sequence",
    "harmonic_rotation_sequence",
    "run_scalar_averaged_sweep",
    "run_affine_limit_sweep",
    "run_codim1_sweep",
    "run_decoupling_sweep",
    "run_two_ball_sweep",
    "list_scenarios",
    "get_scenario",
    "run_scenario",
]


# ---------------------------------------------------------------------------
# Example sequences
# ---------------------------------------------------------------------------


def alternating_sequence(n_steps: int) -> np.ndarray:
    """x_n = ((-1)^n, 0): constant distances to the vertical axis, no limit."""
    pts = np.zeros((n_steps + 1, 2))
    pts[:, 0] = (-1.0) ** np.arange(n_steps + 1)
    return pts


def harmonic_rotation_sequence(n_steps: int) -> np.ndarray:
    """Unit-circle walk with angle increments 1/k.

    Steps vanish like 1/n while the partial angles diverge, so every circle
    point is a cluster point.
    """
    theta = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, n_steps + 1))])
    return np.column_stack([np.cos(theta), np.sin(theta)])


# ---------------------------------------------------------------------------
# Parameter sweeps (aggregate checks reused by the acceptance suite)
# ---------------------------------------------------------------------------


def run_scalar_averaged_sweep(
    instances: int = 200,
    alphas: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    seed: int = 2025,
    max_steps: int = 100_000,
    tail_window: int = 1000,
    tol: float = 1e-9,
    start_span: float = 10.0,
) -> DiagnosticsReport:
    """Difference orbits of averaged scalar maps must converge.

    For T = (1-a) Id + a R with a random nonexpansive piecewise-linear R, the
    sequence a_n = T^n x - T^n y is checked for (i) convergence within
    ``max_steps``, (ii) |a_{n+1}| <= |a_n|, and (iii) the contraction
    |a_{n+1}| <= |1 - 2a| |a_n| at every sign change.
    """
    rng = np.random.default_rng(seed)
    failures = []
    converged = 0
    for i in range(instances):
        alpha = float(alphas[i % len(alphas)])
        R = random_scalar_piecewise_linear(rng)
        T = ConvexCombination(alpha, Identity(), R)
        x = float(rng.uniform(-start_span, start_span))
        y = float(rng.uniform(-start_span, start_span))
        orbit_x = iterate(T, [x], max_steps)
        orbit_y = iterate(T, [y], max_steps)
        diff = Trajectory(
            orbit_x.points - orbit_y.points,
            kind="difference",
            operator=T,
            start=orbit_x.start,
            partner=orbit_y.start,
        )
        a = diff.points[:, 0]
        est = detect_limit(diff, tail_window, tol)
        if est.status != CONVERGED:
            failures.append(
                {"instance": i, "alpha": alpha, "problem": "limit", "status": est.status}
            )
            continue
        converged += 1
        # slack scaled by the iterate magnitude: the difference of two large
        # floating-point orbits cannot be monotone to an absolute 1e-12
        slack = difference_monotonicity_slack(orbit_x.points, orbit_y.points)
        mag = np.abs(a)
        if float((mag[1:] - mag[:-1] - slack).max()) > 0.0:
            failures.append(
                {"instance": i, "alpha": alpha, "problem": "magnitude_monotonicity"}
            )
            continue
        beta = abs(1.0 - 2.0 * alpha)
        flips = np.nonzero(a[1:] * a[:-1] < 0.0)[0]
        if flips.size and float(
            (mag[flips + 1] - beta * mag[flips] - slack[flips]).max()
        ) > 0.0:
            failures.append(
                {"instance": i, "alpha": alpha, "problem": "sign_flip_contraction"}
            )
    params = {
        "instances": instances,
        "alphas": list(alphas),
        "max_steps": max_steps,
        "tail_window": tail_window,
        "tol": tol,
    }
    meta = {"converged": converged, "failures": len(failures)}
    if not failures:
        return DiagnosticsReport(
            "scalar_averaged_sweep", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "scalar_averaged_sweep", FAIL, {"first_failure": failures[0]},
        params=params, seed=seed, metadata=meta,
    )


def _random_orthogonal(rng, dim: int, min_angle: float = 0.3) -> np.ndarray:
    """Random orthogonal matrix whose nontrivial rotation angles are bounded
    away from zero, keeping orbit convergence observable at desk scale."""
    for _ in range(100):
        q = scipy.stats.ortho_group.rvs(dim=dim, random_state=rng)
        angles = np.abs(np.angle(np.linalg.eigvals(q)))
        nontrivial = angles[angles > 1e-9]
        if nontrivial.size == 0 or float(nontrivial.min()) >= min_angle:
            return q
    raise RuntimeError("could not draw a well-conditioned rotation")


def run_affine_limit_sweep(
    instances: int = 50,
    dims: tuple = (2, 3, 4),
    seed: int = 2026,
    n_steps: int = 4000,
    tol: float = 1e-6,
) -> DiagnosticsReport:
    """Difference orbits of averaged affine maps converge to the null-space
    projection of the start difference.

    L = (1-a) Id + a Q with Q orthogonal; the independent oracle projects
    x - y onto null(Id - L) via an orthonormal null-space basis.
    """
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(instances):
        d = int(dims[i % len(dims)])
        q = _random_orthogonal(rng, d)
        alpha = float(rng.uniform(0.3, 0.7))
        L = (1.0 - alpha) * np.eye(d) + alpha * q
        T = AffineMap(L, rng.uniform(-2, 2, d))
        x0 = rng.uniform(-10, 10, d)
        y0 = rng.uniform(-10, 10, d)
        diff = difference_orbit(T, x0, y0, n_steps)
        est = detect_limit(diff, min(500, n_steps), 1e-9)
        null = scipy.linalg.null_space(np.eye(d) - L)
        target = null @ (null.T @ (x0 - y0)) if null.size else np.zeros(d)
        if est.status != CONVERGED:
            failures.append({"instance": i, "problem": "limit", "status": est.status})
        elif float(np.linalg.norm(est.limit - target)) > tol:
            failures.append(
                {
                    "instance": i,
                    "problem": "limit_mismatch",
                    "gap": float(np.linalg.norm(est.limit - target)),
                }
            )
    params = {"instances": instances, "dims": list(dims), "n_steps": n_steps, "tol": tol}
    meta = {"failures": len(failures)}
    if not failures:
        return DiagnosticsReport(
            "affine_limit_sweep", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "affine_limit_sweep", FAIL, {"first_failure": failures[0]},
        params=params, seed=seed, metadata=meta,
    )


def run_codim1_sweep(
    instances: int = 50,
    dims: tuple = (2, 3),
    seed: int = 2027,
    n_steps: int = 3000,
) -> DiagnosticsReport:
    """Under-relaxed hyperplane reflections must satisfy the codimension-1
    convergence guarantee: hypotheses verified, orbit converged.

    Any hypotheses-pass/no-convergence outcome is a FAIL of the whole sweep.
    """
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(instances):
        d = int(dims[i % len(dims)])
        normal = rng.normal(size=d)
        normal /= np.linalg.norm(normal)
        C = Hyperplane(normal, float(rng.uniform(-2, 2)))
        alpha = float(rng.uniform(0.05, 0.95))
        T = ConvexCombination(alpha, Identity(), Reflector(C))
        x0 = rng.uniform(-5, 5, d)
        rep = check_codim1_theorem(
            C, operator=T, x0=x0, n_steps=n_steps, seed=i, tail_window=500
        )
        if not rep.passed:
            failures.append(
                {"instance": i, "verdict": rep.verdict, "witness": rep.witness}
            )
    params = {"instances": instances, "dims": list(dims), "n_steps": n_steps}
    meta = {"failures": len(failures)}
    if not failures:
        return DiagnosticsReport(
            "codim1_sweep", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "codim1_sweep", FAIL, {"first_failure": failures[0]},
        params=params, seed=seed, metadata=meta,
    )


def _dual_cone_interior_point(rng, K: ConvexSet, margin: float = 0.3) -> np.ndarray:
    d = K.dim
    z = rng.normal(size=d)
    if isinstance(K, Ray):
        u = z - min(0.0, float(z @ K.direction)) * K.direction + margin * K.direction
        return u
    if isinstance(K, Orthant):
        return K.signs * (np.abs(z) + margin)
    if isinstance(K, LinearSubspace):
        u = z - K.basis.T @ (K.basis @ z)
        if np.linalg.norm(u) < margin:
            comp = scipy.linalg.null_space(K.basis)
            u = u + margin * comp[:, 0]
        return u
    raise ConfigError(f"unsupported cone {type(K).__name__}")


def _cone_generator(rng, K: ConvexSet) -> np.ndarray:
    if isinstance(K, Ray):
        return K.direction.copy()
    if isinstance(K, Orthant):
        i = int(rng.integers(K.dim))
        e = np.zeros(K.dim)
        e[i] = K.signs[i]
        return e
    if isinstance(K, LinearSubspace):
        return K.basis[0].copy()
    raise ConfigError(f"unsupported cone {type(K).__name__}")


def _decoupling_instance(rng, kind: str):
    """One seeded instance for the decoupling equivalence sweep.

    good:      straight approach toward the summand with steps in the dual
               cone (the true property holds, with margin).
    bad_fejer: one step moves outward, so the distance to the summand anchor
               grows; both the decoupled and the direct check must fail.
    bad_cone:  distances to the (point) summand keep shrinking but one step
               rotates against a cone generator, leaving the dual cone; the
               direct Minkowski-sum check must fail through a cone witness.
    """
    d = int(rng.integers(2, 5))
    cone_choice = int(rng.integers(3))
    if cone_choice == 0:
        K = Ray(np.zeros(d), rng.normal(size=d))
    elif cone_choice == 1:
        K = Orthant(np.where(rng.uniform(size=d) < 0.5, -1.0, 1.0))
    else:
        k = int(rng.integers(1, d))
        K = LinearSubspace(np.linalg.qr(rng.normal(size=(d, k)))[0].T)
    if kind == "bad_cone":
        E = Point(rng.uniform(-2, 2, d))
    elif int(rng.integers(2)) == 0:
        E = Point(rng.uniform(-2, 2, d))
    else:
        E = Ball(rng.uniform(-2, 2, d), float(rng.uniform(0.3, 1.0)))
    anchor = E.anchor()
    u = _dual_cone_interior_point(rng, K)
    w = -u
    wn = float(np.linalg.norm(w))
    r = E.radius if isinstance(E, Ball) else 0.0
    t_min = 1.05 * r / wn if r else 0.2
    ts = np.geomspace(4.0 * t_min + 3.0, t_min, 12)
    pts = anchor + ts[:, None] * w

    if kind == "bad_fejer":
        pts[6] = anchor + (ts[5] * 2.0) * w  # outward jump
    elif kind == "bad_cone":
        k0 = _cone_generator(rng, K)
        w_hat = w / wn
        m = -k0 - float(-k0 @ w_hat) * w_hat
        mn = float(np.linalg.norm(m))
        if mn < 1e-9:
            return None  # generator parallel to the approach: redraw
        m_hat = m / mn
        j = 5
        radius_next = 0.995 * ts[j] * wn
        phi = 0.5
        cand = anchor + radius_next * (np.cos(phi) * w_hat + np.sin(phi) * m_hat)
        step = cand - pts[j]
        if float(step @ k0) > -0.05:
            return None  # rotation failed to leave the dual cone: redraw
        pts = np.vstack([pts[: j + 1], cand])
    return Trajectory(pts), E, K, kind


def run_decoupling_sweep(
    instances: int = 50,
    seed: int = 2028,
    witnesses: int = 10,
    tol: float = 1e-10,
) -> DiagnosticsReport:
    """The decoupled Fejer check (vs E, plus steps in the dual cone) must
    agree in verdict with the direct check against E + K on every instance."""
    rng = np.random.default_rng(seed)
    kinds = ["good", "bad_fejer", "good", "bad_cone", "good"]
    failures = []
    built = 0
    while built < instances:
        kind = kinds[built % len(kinds)]
        inst = _decoupling_instance(rng, kind)
        if inst is None:
            continue
        traj, E, K, kind = inst
        rep = check_sum_decoupling(traj, E, K, witnesses=witnesses, seed=built, tol=tol)
        expected_pass = kind == "good"
        problems = []
        if rep.metadata["equivalence_agrees"] is not True:
            problems.append("equivalence_disagrees")
        if rep.passed != expected_pass:
            problems.append(f"expected {'pass' if expected_pass else 'fail'}")
        if problems:
            failures.append(
                {
                    "instance": built,
                    "kind": kind,
                    "problems": problems,
                    "metadata": rep.metadata,
                }
            )
        built += 1
    params = {"instances": instances, "witnesses": witnesses, "tol": tol}
    meta = {"failures": len(failures)}
    if not failures:
        return DiagnosticsReport(
            "decoupling_sweep", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "decoupling_sweep", FAIL, {"first_failure": failures[0]},
        params=params, seed=seed, metadata=meta,
    )


def run_two_ball_sweep(
    pairs: int = 20,
    seed: int = 2029,
    n_steps: int = 100_000,
    tail: int = 1000,
    match_tol: float = 1e-6,
    fejer_tol: float = 1e-9,
) -> DiagnosticsReport:
    """Two-ball splitting drift: tail estimate vs closed form, plus Fejer
    monotonicity of the drift-compensated orbit with respect to the fixed ray.
    """
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(pairs):
        ra, rb = rng.uniform(0.5, 2.0, 2)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        dist = float(rng.uniform(ra + rb + 0.5, 10.0))
        ca = rng.uniform(-2, 2, 3)
        cb = ca + dist * direction
        A, B = Ball(ca, float(ra)), Ball(cb, float(rb))
        T = DouglasRachford(A, B)
        x0 = ca + rng.uniform(-3, 3, 3)
        orbit = iterate(T, x0, n_steps)
        v_est, residual = displacement_from_orbit(orbit, tail)
        v_closed = two_ball_displacement(A, B)
        gap = float(np.linalg.norm(v_est - v_closed))
        if gap > match_tol:
            failures.append({"pair": i, "problem": "displacement", "gap": gap})
            continue
        ray = fixed_set_description(T, v_closed)
        normalized = normalized_from_raw(orbit, v_closed)
        rep = check_fejer(
            normalized, ray, witnesses=10, seed=i, tol=fejer_tol
        )
        if not rep.passed:
            failures.append({"pair": i, "problem": "fejer", "witness": rep.witness})
    params = {
        "pairs": pairs,
        "n_steps": n_steps,
        "tail": tail,
        "match_tol": match_tol,
        "fejer_tol": fejer_tol,
    }
    meta = {"failures": len(failures)}
    if not failures:
        return DiagnosticsReport(
            "two_ball_sweep", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "two_ball_sweep", FAIL, {"first_failure": failures[0]},
        params=params, seed=seed, metadata=meta,
    )


# ---------------------------------------------------------------------------
# Scenario model
# ---------------------------------------------------------------------------

EXPECTED_OUTCOMES = {
    "pass",
    "fail",
    "inconclusive",
    "converged",
    "diverging",
    "oscillating",
}


@dataclass
class TrajectoryDef:
    """How to build one named trajectory of a scenario."""

    name: str
    kind: str  # raw | normalized | difference | shadow | alternating
    #            | harmonic_rotation | points
    operator: str | None = None
    start: list | None = None
    partner: list | None = None
    shift: list | str | None = None  # vector, "two_ball", or "estimate"
    base: str | None = None
    set_name: str | None = None
    points: list | None = None
    n_steps: int | None = None


@dataclass
class CheckDef:
    """One checker invocation with an optional expected outcome.

    ``expect`` is a report verdict (pass/fail/inconclusive), a limit status
    for kind="limit", or None for evidence-only checks.
    """

    name: str
    kind: str
    trajectory: str | None = None
    expect: str | None = None
    params: dict = field(default_factory=dict)


@dataclass
class ScenarioSpec:
    name: str
    description: str
    topic: str
    n_steps: int = 1000
    seed: int = 0
    tol: float = 1e-9
    tail_window: int = 1000
    sets: dict = field(default_factory=dict)
    operators: dict = field(default_factory=dict)
    trajectories: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def validate(self) -> None:
        names = set()
        for t in self.trajectories:
            if t.name in names:
                raise ConfigError(f"trajectories: duplicate name {t.name!r}")
            names.add(t.name)
            if t.operator is not None and t.operator not in self.operators:
                raise ConfigError(
                    f"trajectories.{t.name}: unknown operator {t.operator!r}"
                )
            if t.set_name is not None and t.set_name not in self.sets:
                raise ConfigError(f"trajectories.{t.name}: unknown set {t.set_name!r}")
            if t.base is not None and t.base not in names:
                raise ConfigError(
                    f"trajectories.{t.name}: base {t.base!r} must be defined earlier"
                )
        check_names = set()
        for c in self.checks:
            if c.name in check_names:
                raise ConfigError(f"checks: duplicate name {c.name!r}")
            check_names.add(c.name)
            if c.trajectory is not None and c.trajectory not in names:
                raise ConfigError(
                    f"checks.{c.name}: unknown trajectory {c.trajectory!r}"
                )
            if c.expect is not None and c.expect not in EXPECTED_OUTCOMES:
                raise ConfigError(
                    f"checks.{c.name}: unknown expected outcome {c.expect!r}"
                )


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    expected: str | None
    actual: str
    matched: bool


@dataclass
class RunArtifacts:
    """Everything a scenario run produced."""

    scenario: str
    trajectories: dict
    reports: dict
    summary: list

    @property
    def all_matched(self) -> bool:
        return all(o.matched for o in self.summary)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _build_trajectory(spec, tdef, built, n_steps, seed):
    n = tdef.n_steps if tdef.n_steps is not None else n_steps
    if tdef.kind == "alternating":
        return Trajectory(alternating_sequence(n))
    if tdef.kind == "harmonic_rotation":
        return Trajectory(harmonic_rotation_sequence(n))
    if tdef.kind == "points":
        return Trajectory(np.asarray(tdef.points, dtype=float))
    if tdef.kind == "shadow":
        return shadow(built[tdef.base], spec.sets[tdef.set_name])
    op = spec.operators[tdef.operator]
    if tdef.kind == "raw":
        return iterate(op, np.asarray(tdef.start, dtype=float), n)
    if tdef.kind == "difference":
        return difference_orbit(
            op,
            np.asarray(tdef.start, dtype=float),
            np.asarray(tdef.partner, dtype=float),
            n,
        )
    if tdef.kind == "normalized":
        if tdef.shift == "two_ball":
            if not isinstance(op, DouglasRachford):
                raise ConfigError(
                    f"trajectories.{tdef.name}: shift 'two_ball' needs a "
                    "Douglas-Rachford operator on two balls"
                )
            v = two_ball_displacement(op.first, op.second)
        elif tdef.shift == "estimate":
            from .dynamics import estimate_displacement

            v = estimate_displacement(
                op, np.asarray(tdef.start, dtype=float), n, min(1000, n // 2)
            ).v
        else:
            v = np.asarray(tdef.shift, dtype=float)
        if tdef.base is not None:
            return normalized_from_raw(built[tdef.base], v)
        return normalized_orbit(op, np.asarray(tdef.start, dtype=float), v, n)
    raise ConfigError(f"trajectories.{tdef.name}: unknown kind {tdef.kind!r}")


_SWEEPS = {
    "scalar_averaged_sweep": run_scalar_averaged_sweep,
    "affine_limit_sweep": run_affine_limit_sweep,
    "codim1_sweep": run_codim1_sweep,
    "decoupling_sweep": run_decoupling_sweep,
    "two_ball_sweep": run_two_ball_sweep,
}


def _limit_report(name, est, expect):
    meta = {"status": est.status}
    for key in ("limit", "residual", "growth_rate", "cluster_gap"):
        val = getattr(est, key)
        if val is not None:
            meta[key] = val
    if est.cluster_points is not None:
        meta["clusters"] = est.cluster_points
    matched = expect is None or est.status == expect
    if matched:
        return DiagnosticsReport("detect_limit", PASS, metadata=meta)
    return DiagnosticsReport(
        "detect_limit",
        FAIL,
        {"expected_status": expect, "actual_status": est.status},
        metadata=meta,
    )


def _run_check(spec, cdef, built, seed, tol, tail_window):
    p = dict(cdef.params)
    kind = cdef.kind
    traj = built.get(cdef.trajectory) if cdef.trajectory else None
    if kind == "fejer":
        rep = check_fejer(
            traj,
            spec.sets[p["set"]],
            witnesses=p.get("witnesses", 10),
            seed=p.get("seed", seed),
            tol=p.get("tol", 1e-10),
        )
        return rep, rep.verdict
    if kind == "asymptotic_regularity":
        rep = check_asymptotic_regularity(traj, tol=p.get("tol", 1e-9))
        return rep, rep.verdict
    if kind == "limit":
        window = min(p.get("tail_window", tail_window), len(traj))
        est = detect_limit(traj, window, p.get("tol", tol))
        rep = _limit_report(cdef.name, est, cdef.expect)
        return rep, est.status
    if kind == "connectivity":
        cluster = estimate_cluster_set(
            traj,
            tail_fraction=p.get("tail_fraction", 0.5),
            radius=p.get("radius"),
        )
        rep = check_connectivity(cluster)
        return rep, rep.verdict
    if kind == "cluster_orthogonality":
        cluster = estimate_cluster_set(
            traj,
            tail_fraction=p.get("tail_fraction", 0.5),
            radius=p.get("radius"),
        )
        rep = check_cluster_orthogonality(
            cluster,
            spec.sets[p["set"]],
            witnesses=p.get("witnesses", 10),
            seed=p.get("seed", seed),
            tol=p.get("tol", 1e-8),
        )
        return rep, rep.verdict
    if kind == "sum_decoupling":
        rep = check_sum_decoupling(
            traj,
            spec.sets[p["summand"]],
            spec.sets[p["cone"]],
            witnesses=p.get("witnesses", 10),
            seed=p.get("seed", seed),
            tol=p.get("tol", 1e-10),
        )
        return rep, rep.verdict
    if kind == "shadow_superset":
        rep = check_shadow_superset(
            traj,
            spec.sets[p["inner"]],
            spec.sets[p["outer"]],
            tol=p.get("tol", 1e-6),
            witnesses=p.get("witnesses", 10),
            seed=p.get("seed", seed),
        )
        return rep, rep.verdict
    if kind == "codim1":
        rep = check_codim1_theorem(
            spec.sets[p["set"]],
            trajectory=traj,
            operator=spec.operators.get(p.get("operator")),
            x0=p.get("start"),
            n_steps=p.get("n_steps", spec.n_steps),
            seed=p.get("seed", seed),
        )
        return rep, rep.verdict
    if kind == "nonexpansive":
        rep = verify_nonexpansive(
            spec.operators[p["operator"]],
            trials=p.get("trials", 1000),
            seed=p.get("seed", seed),
            tol=p.get("tol", 1e-9),
            dim=p.get("dim"),
        )
        return rep, rep.verdict
    if kind == "displacement_match":
        op = spec.operators[p["operator"]]
        if not isinstance(op, DouglasRachford):
            raise ConfigError(
                f"checks.{cdef.name}: displacement_match needs a Douglas-Rachford "
                "operator on two balls"
            )
        tail = p.get("tail", 1000)
        v_est, residual = displacement_from_orbit(traj, tail)
        v_closed = two_ball_displacement(op.first, op.second)
        gap = float(np.linalg.norm(v_est - v_closed))
        match_tol = p.get("tol", 1e-6)
        meta = {
            "estimated": v_est,
            "closed_form": v_closed,
            "gap": gap,
            "tail_residual": residual,
        }
        if gap <= match_tol:
            rep = DiagnosticsReport(
                "displacement_match", PASS, params={"tol": match_tol, "tail": tail},
                metadata=meta,
            )
        else:
            rep = DiagnosticsReport(
                "displacement_match", FAIL, {"gap": gap},
                params={"tol": match_tol, "tail": tail}, metadata=meta,
            )
        return rep, rep.verdict
    if kind in _SWEEPS:
        rep = _SWEEPS[kind](**p)
        return rep, rep.verdict
    raise ConfigError(f"checks.{cdef.name}: unknown check kind {kind!r}")


def run_scenario(
    spec: ScenarioSpec,
    n_steps: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
    out_dir: str | Path | None = None,
) -> RunArtifacts:
    """Build all trajectories, run all checks, optionally export artifacts."""
    spec.validate()
    n = n_steps if n_steps is not None else spec.n_steps
    sd = seed if seed is not None else spec.seed
    tl = tol if tol is not None else spec.tol
    built: dict = {}
    for tdef in spec.trajectories:
        built[tdef.name] = _build_trajectory(spec, tdef, built, n, sd)
    reports: dict = {}
    summary: list = []
    for cdef in spec.checks:
        try:
            rep, actual = _run_check(spec, cdef, built, sd, tl, spec.tail_window)
            matched = cdef.expect is None or actual == cdef.expect
        except ConfigError:
            raise
        except Exception as exc:  # runtime error attached to the failing check
            rep = DiagnosticsReport(
                cdef.kind, FAIL, {"error": f"{type(exc).__name__}: {exc}"}
            )
            actual, matched = "error", False
        reports[cdef.name] = rep
        summary.append(CheckOutcome(cdef.name, cdef.expect, actual, matched))
    artifacts = RunArtifacts(spec.name, built, reports, summary)
    if out_dir is not None:
        from .exports import export_run

        export_run(artifacts, Path(out_dir))
    return artifacts


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------


def _spec_alternating_pair() -> ScenarioSpec:
    return ScenarioSpec(
        name="alternating-pair",
        description=(
            "The sequence ((-1)^n, 0) keeps every distance to the vertical "
            "axis constant, so the monotonicity check passes with zero "
            "per-step drops, yet the sequence oscillates between two points "
            "at gap 2: step sizes never shrink, so the codimension-1 "
            "convergence guarantee does not apply."
        ),
        topic="Fejer monotone but not asymptotically regular",
        n_steps=200,
        seed=1,
        tol=1e-9,
        tail_window=100,
        sets={"axis": Hyperplane([1.0, 0.0], 0.0)},
        trajectories=[TrajectoryDef("orbit", "alternating")],
        checks=[
            CheckDef("fejer", "fejer", "orbit", "pass", {"set": "axis"}),
            CheckDef(
                "asymptotic-regularity", "asymptotic_regularity", "orbit", "fail",
                {"tol": 1e-9},
            ),
            CheckDef("limit", "limit", "orbit", "oscillating"),
            CheckDef("connectivity", "connectivity", "orbit", "fail", {"radius": 0.1}),
            CheckDef(
                "cluster-orthogonality", "cluster_orthogonality", "orbit", "pass",
                {"set": "axis", "radius": 0.1, "tol": 1e-8},
            ),
        ],
    )


def _spec_harmonic_rotation() -> ScenarioSpec:
    return ScenarioSpec(
        name="harmonic-rotation",
        description=(
            "A unit-circle walk with angle increments 1/k: steps vanish "
            "(asymptotically regular) and the norm stays 1 (Fejer monotone "
            "with respect to the origin), but the divergent angle sum makes "
            "the whole circle cluster; the reference set has codimension 2, "
            "so no convergence is promised.  Cluster estimation uses the "
            "full history: the final half of the walk alone covers only an "
            "arc of length ln 2."
        ),
        topic="asymptotically regular without convergence; codimension 2",
        n_steps=100_000,
        seed=2,
        tol=1e-9,
        tail_window=1000,
        sets={"origin": Point([0.0, 0.0])},
        trajectories=[TrajectoryDef("orbit", "harmonic_rotation")],
        checks=[
            CheckDef("fejer", "fejer", "orbit", "pass", {"set": "origin"}),
            CheckDef(
                "asymptotic-regularity", "asymptotic_regularity", "orbit", "pass",
                {"tol": 1e-4},
            ),
            CheckDef(
                "connectivity", "connectivity", "orbit", "pass",
                {"radius": 0.1, "tail_fraction": 1.0},
            ),
            CheckDef(
                "cluster-orthogonality", "cluster_orthogonality", "orbit", "pass",
                {"set": "origin", "radius": 0.1, "tail_fraction": 1.0},
            ),
            CheckDef("limit", "limit", "orbit", "inconclusive"),
        ],
    )


def _spec_negation_r1() -> ScenarioSpec:
    return ScenarioSpec(
        name="negation-r1",
        description=(
            "Sign flipping on the line: an isometry whose orbits and orbit "
            "differences alternate forever, showing that plain "
            "nonexpansiveness gives no convergence of T^n x - T^n y."
        ),
        topic="orbit differences of an isometry need not converge",
        n_steps=100,
        seed=3,
        tol=1e-9,
        tail_window=50,
        operators={"T": Negation()},
        trajectories=[
            TrajectoryDef("orbit", "raw", operator="T", start=[1.0]),
            TrajectoryDef(
                "difference", "difference", operator="T", start=[1.0], partner=[0.0]
            ),
        ],
        checks=[
            CheckDef("limit", "limit", "orbit", "oscillating"),
            CheckDef("difference-limit", "limit", "difference", "oscillating"),
        ],
    )


def _spec_pazy_translation() -> ScenarioSpec:
    return ScenarioSpec(
        name="pazy-translation",
        description=(
            "A fixed-point-free translation: orbit norms grow without bound "
            "at exactly the shift length per step, the alternative branch of "
            "the boundedness dichotomy for nonexpansive maps."
        ),
        topic="fixed-point-free orbits diverge in norm",
        n_steps=2000,
        seed=4,
        tol=1e-9,
        tail_window=500,
        operators={"T": Translation([0.75])},
        trajectories=[TrajectoryDef("orbit", "raw", operator="T", start=[0.0])],
        checks=[CheckDef("limit", "limit", "orbit", "diverging")],
    )


def _spec_scalar_averaged_sweep() -> ScenarioSpec:
    return ScenarioSpec(
        name="scalar-averaged-sweep",
        description=(
            "Averaged maps on the line: for T = (1-a) Id + a R with R a "
            "random nonexpansive piecewise-linear map, orbit differences "
            "a_n = T^n x - T^n y converge; |a_n| never grows and each sign "
            "change contracts by at least |1 - 2a|."
        ),
        topic="averagedness forces convergence of scalar orbit differences",
        n_steps=20_000,
        seed=5,
        checks=[
            CheckDef(
                "sweep", "scalar_averaged_sweep", None, "pass",
                {"instances": 24, "max_steps": 20_000, "seed": 5},
            )
        ],
    )


def _spec_affine_linear_limit() -> ScenarioSpec:
    return ScenarioSpec(
        name="affine-linear-limit",
        description=(
            "Averaged affine maps x -> Lx + b: orbit differences equal "
            "L^n (x - y) and converge to the projection of x - y onto the "
            "fixed space of L, computed independently from a null-space "
            "basis."
        ),
        topic="affine orbit differences converge to a subspace projection",
        n_steps=4000,
        seed=6,
        checks=[
            CheckDef(
                "sweep", "affine_limit_sweep", None, "pass",
                {"instances": 10, "n_steps": 4000, "seed": 6},
            )
        ],
    )


def _spec_codim1_reflection() -> ScenarioSpec:
    line = Hyperplane([2.0, 1.0], 1.0)
    return ScenarioSpec(
        name="codim1-reflection",
        description=(
            "Under-relaxed reflection through a line in the plane: the orbit "
            "is Fejer monotone with respect to the line (codimension 1) and "
            "asymptotically regular, so it must converge; its limit is the "
            "projection of the start."
        ),
        topic="codimension-1 convergence guarantee",
        n_steps=3000,
        seed=7,
        tail_window=500,
        sets={"line": line},
        operators={"T": ConvexCombination(0.3, Identity(), Reflector(line))},
        trajectories=[
            TrajectoryDef("orbit", "raw", operator="T", start=[4.0, -1.0])
        ],
        checks=[
            CheckDef("fejer", "fejer", "orbit", "pass", {"set": "line"}),
            CheckDef(
                "asymptotic-regularity", "asymptotic_regularity", "orbit", "pass",
                {"tol": 1e-9},
            ),
            CheckDef(
                "guarantee", "codim1", "orbit", "pass",
                {"set": "line"},
            ),
            CheckDef("limit", "limit", "orbit", "converged"),
        ],
    )


def _spec_decoupling_demo() -> ScenarioSpec:
    E = Point([0.0, 0.0])
    K = Ray([0.0, 0.0], [1.0, 0.0])
    w = np.array([-1.0, -0.5])  # -w lies strictly inside the dual halfspace
    ts = 3.0 * 0.75 ** np.arange(12)
    pts = (ts[:, None] * w).tolist()
    return ScenarioSpec(
        name="decoupling-demo",
        description=(
            "Monotone approach to the summand along a direction whose "
            "reversal lies in the dual cone: Fejer monotonicity with respect "
            "to the Minkowski sum E + K decouples into monotonicity with "
            "respect to E plus a dual-cone condition on the steps, and both "
            "routes agree."
        ),
        topic="sum decoupling of Fejer monotonicity",
        n_steps=12,
        seed=8,
        sets={"summand": E, "cone": K},
        trajectories=[TrajectoryDef("walk", "points", points=pts)],
        checks=[
            CheckDef(
                "decoupled", "sum_decoupling", "walk", "pass",
                {"summand": "summand", "cone": "cone"},
            ),
            CheckDef(
                "sweep", "decoupling_sweep", None, "pass",
                {"instances": 10, "seed": 8},
            ),
        ],
    )


def _two_ball_spec(name, description, A, B, x0, n_steps, extra_checks=()):
    T = DouglasRachford(A, B)
    v = two_ball_displacement(A, B)
    fix_ray = fixed_set_description(T, v)
    sets = {"first": A, "second": B}
    if fix_ray is not None:
        sets["fixed-ray"] = fix_ray
    checks = [
        CheckDef(
            "displacement-match", "displacement_match", "orbit", "pass",
            {"operator": "T", "tail": 1000, "tol": 1e-6},
        ),
        CheckDef(
            "normalized-fejer", "fejer", "normalized", "pass",
            {"set": "fixed-ray", "tol": 1e-9},
        ),
        # evidence only: the tangency geometry converges sublinearly, so the
        # detection tolerance is loose and the residual is recorded
        CheckDef("normalized-limit", "limit", "normalized", None, {"tol": 1e-4}),
    ]
    checks.extend(extra_checks)
    return ScenarioSpec(
        name=name,
        description=description,
        topic="two-ball splitting with drift; conjectured convergence",
        n_steps=n_steps,
        seed=9,
        tail_window=1000,
        sets=sets,
        operators={"T": T},
        trajectories=[
            TrajectoryDef("orbit", "raw", operator="T", start=list(x0)),
            TrajectoryDef(
                "normalized", "normalized", operator="T", start=list(x0),
                shift="two_ball", base="orbit",
            ),
        ],
        checks=checks,
    )


def _spec_dr_two_balls_r3() -> ScenarioSpec:
    return _two_ball_spec(
        "dr-two-balls-r3",
        (
            "Reflect-reflect-average splitting on two disjoint balls in 3-d "
            "space: orbits drift by the gap vector, the drift-compensated "
            "orbit stays Fejer monotone with respect to the fixed ray (a set "
            "of codimension 2, outside every proven convergence criterion), "
            "and its convergence is recorded as evidence only.  Ball "
            "parameters and the start are artifact-chosen defaults.  The "
            "exported trajectory replaces a picture: the first few "
            "drift-compensated points trace the conjectured approach."
        ),
        Ball([0.0, 0.0, 0.0], 1.0),
        Ball([5.0, 0.0, 0.0], 1.0),
        (0.0, 3.0, 3.0),
        100_000,
    )


def _spec_open_problem_p1() -> ScenarioSpec:
    # drift g decays geometrically from 1 to 2^-12, then stays constant:
    # T = Id + g has no fixed points and minimal displacement 2^-12.
    k = 12
    breakpoints = np.arange(0.0, k + 1.0)
    slopes = np.concatenate([[1.0], 1.0 - 0.5 ** np.arange(1.0, k + 1.0), [1.0]])
    T = ScalarPiecewiseLinear(breakpoints, slopes, anchor_value=1.0)
    v = -(0.5**k)
    return ScenarioSpec(
        name="open-problem-p1",
        description=(
            "Probe for the line case with vanishing minimal displacement but "
            "no fixed points.  A map with finitely many linear pieces cannot "
            "realize that class exactly (its displacement infimum is always "
            "attained), so this scenario uses a forward drift decaying to "
            "2^-12: fixed-point free, with tiny nonzero minimal "
            "displacement.  Orbit-difference behaviour is exported as "
            "evidence; no convergence verdict is asserted."
        ),
        topic="open: scalar maps with v = 0 and no fixed points",
        n_steps=100_000,
        seed=10,
        operators={"T": T},
        trajectories=[
            TrajectoryDef(
                "difference", "difference", operator="T", start=[-2.0], partner=[-7.0]
            ),
            TrajectoryDef(
                "normalized", "normalized", operator="T", start=[-2.0], shift=[v]
            ),
        ],
        checks=[
            CheckDef(
                "nonexpansive", "nonexpansive", None, "pass",
                {"operator": "T", "trials": 500},
            ),
            CheckDef("difference-limit", "limit", "difference", None),
            CheckDef("normalized-limit", "limit", "normalized", None),
        ],
    )


def _spec_open_problem_p2() -> ScenarioSpec:
    # same decay pattern on top of a unit drift floor of 1/4: the minimal
    # displacement is attained on the final piece, as it must be for any
    # finitely-piecewise-linear map.
    k = 12
    breakpoints = np.arange(0.0, k + 1.0)
    slopes = np.concatenate([[1.0], 1.0 - 0.5 ** np.arange(1.0, k + 1.0), [1.0]])
    T = ScalarPiecewiseLinear(breakpoints, slopes, anchor_value=1.25)
    v = -(0.25 + 0.5**k)
    return ScenarioSpec(
        name="open-problem-p2",
        description=(
            "Probe for the line case with nonzero minimal displacement but "
            "empty generalized fixed set.  For maps with finitely many "
            "linear pieces the displacement infimum is always attained, so "
            "the generalized fixed set is never empty and the open case is "
            "out of reach exactly; this scenario documents that boundary "
            "with a drift decaying to a floor of 1/4 and exports the "
            "observed behaviour as evidence."
        ),
        topic="open: scalar maps with v != 0 and empty generalized fixed set",
        n_steps=100_000,
        seed=11,
        operators={"T": T},
        trajectories=[
            TrajectoryDef(
                "difference", "difference", operator="T", start=[3.0], partner=[-4.0]
            ),
            TrajectoryDef(
                "normalized", "normalized", operator="T", start=[3.0], shift=[v]
            ),
        ],
        checks=[
            CheckDef(
                "nonexpansive", "nonexpansive", None, "pass",
                {"operator": "T", "trials": 500},
            ),
            CheckDef("difference-limit", "limit", "difference", None),
            CheckDef("normalized-limit", "limit", "normalized", None),
        ],
    )


def _spec_open_problem_p3() -> ScenarioSpec:
    spec = _two_ball_spec(
        "open-problem-p3",
        (
            "Does averagedness with nonzero drift force convergence of orbit "
            "differences beyond the plane?  The two-ball splitting operator "
            "in 3-d space has a fixed ray of codimension 2, one past every "
            "proven criterion; orbit differences and the drift-compensated "
            "orbit are exported as numerical evidence."
        ),
        Ball([0.0, 0.0, 0.0], 1.5),
        Ball([4.0, 1.0, 2.0], 0.75),
        (1.0, 2.0, -1.0),
        50_000,
    )
    spec.trajectories.append(
        TrajectoryDef(
            "difference", "difference", operator="T",
            start=[1.0, 2.0, -1.0], partner=[-2.0, 0.0, 3.0],
        )
    )
    spec.checks.append(
        CheckDef("difference-limit", "limit", "difference", None, {"tol": 1e-4})
    )
    spec.topic = "open: orbit-difference convergence in dimension >= 3"
    return spec


def _spec_open_problem_p4() -> ScenarioSpec:
    spec = _two_ball_spec(
        "open-problem-p4",
        (
            "Strong versus weak convergence of orbit differences.  At desk "
            "scale every space is finite-dimensional, where the two notions "
            "coincide, so this scenario runs the same diagnostics as the "
            "3-d splitting probe and records that the distinction is "
            "invisible here by construction."
        ),
        Ball([0.0, 0.0, 0.0], 1.0),
        Ball([0.0, 0.0, 6.0], 2.0),
        (1.0, -2.0, 0.0),
        50_000,
    )
    spec.trajectories.append(
        TrajectoryDef(
            "difference", "difference", operator="T",
            start=[1.0, -2.0, 0.0], partner=[0.0, 4.0, 1.0],
        )
    )
    spec.checks.append(
        CheckDef("difference-limit", "limit", "difference", None, {"tol": 1e-4})
    )
    spec.topic = "open: strong vs weak convergence (coincide at desk scale)"
    return spec


_REGISTRY = {
    "alternating-pair": _spec_alternating_pair,
    "harmonic-rotation": _spec_harmonic_rotation,
    "negation-r1": _spec_negation_r1,
    "pazy-translation": _spec_pazy_translation,
    "scalar-averaged-sweep": _spec_scalar_averaged_sweep,
    "affine-linear-limit": _spec_affine_linear_limit,
    "codim1-reflection": _spec_codim1_reflection,
    "decoupling-demo": _spec_decoupling_demo,
    "dr-two-balls-r3": _spec_dr_two_balls_r3,
    "open-problem-p1": _spec_open_problem_p1,
    "open-problem-p2": _spec_open_problem_p2,
    "open-problem-p3": _spec_open_problem_p3,
    "open-problem-p4": _spec_open_problem_p4,
}


def list_scenarios() -> list[tuple[str, str, str]]:
    """(name, description, topic) for every built-in scenario."""
    out = []
    for name, builder in _REGISTRY.items():
        spec = builder()
        out.append((name, spec.description, spec.topic))
    return out


def get_scenario(name: str) -> ScenarioSpec:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ConfigError(
            f"unknown scenario {name!r}; run `fejerlab list` for the registry"
        ) from None
