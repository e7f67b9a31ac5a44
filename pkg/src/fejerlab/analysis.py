"""Checkers for Fejer-monotone sequence properties.

Universally quantified properties over an infinite set are necessarily
checked on finite, seeded witness samples; a PASS from such a checker is a
necessary condition, never a proof, and the reports say so in their metadata.
Failures always carry a concrete witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clustering import component_gap, greedy_cover, single_linkage_labels
from .dynamics import (
    CONVERGED,
    DEFAULT_TOL,
    Trajectory,
    detect_limit,
    iterate,
    shadow,
)
from .errors import UnsupportedSetError
from .geometry import (
    ConvexSet,
    MinkowskiSum,
    codimension,
    dual_cone_contains,
    sample_witnesses,
)
from .operators import OperatorExpr
from .report import FAIL, INCONCLUSIVE, PASS, DiagnosticsReport

NECESSARY_CONDITION = "necessary-condition (finite witnesses)"


def _points_of(trajectory) -> np.ndarray:
    if isinstance(trajectory, Trajectory):
        return trajectory.points
    return np.asarray(trajectory, dtype=float)


def _auto_witness_radius(points: np.ndarray, C: ConvexSet) -> float:
    reach = float(np.linalg.norm(points - C.anchor(), axis=1).max())
    return max(1.0, 2.0 * reach)


def check_fejer(
    trajectory,
    C: ConvexSet,
    witnesses: int = 10,
    seed: int = 0,
    tol: float = 1e-10,
    witness_radius: float | None = None,
) -> DiagnosticsReport:
    """Distance to every sampled witness of C must be nonincreasing.

    ``per_step`` records the squared-distance drops to the anchor witness.
    """
    pts = _points_of(trajectory)
    if pts.shape[0] < 2:
        raise ValueError("need at least two trajectory points")
    radius = (
        _auto_witness_radius(pts, C) if witness_radius is None else witness_radius
    )
    ws = np.stack(sample_witnesses(C, witnesses, seed=seed, radius=radius))
    dists = np.linalg.norm(pts[:, None, :] - ws[None, :, :], axis=2)
    increases = dists[1:] - dists[:-1]
    sq_anchor = np.sum((pts - ws[0]) ** 2, axis=1)
    per_step = sq_anchor[:-1] - sq_anchor[1:]
    params = {
        "witnesses": witnesses,
        "tol": tol,
        "witness_radius": radius,
    }
    meta = {
        "semantics": NECESSARY_CONDITION,
        "worst_increase": float(increases.max()),
    }
    worst = float(increases.max())
    if worst <= tol:
        return DiagnosticsReport(
            "check_fejer", PASS, params=params, seed=seed, per_step=per_step,
            metadata=meta,
        )
    step, widx = np.unravel_index(int(np.argmax(increases)), increases.shape)
    witness = {
        "step": int(step),
        "witness_point": ws[widx],
        "distance_before": float(dists[step, widx]),
        "distance_after": float(dists[step + 1, widx]),
        "increase": worst,
    }
    return DiagnosticsReport(
        "check_fejer", FAIL, witness, params=params, seed=seed, per_step=per_step,
        metadata=meta,
    )


def check_asymptotic_regularity(trajectory, tol: float = 1e-9) -> DiagnosticsReport:
    """Consecutive steps must vanish: the last 10% of step norms stay <= tol."""
    pts = _points_of(trajectory)
    if pts.shape[0] < 2:
        raise ValueError("need at least two trajectory points")
    steps = np.linalg.norm(pts[1:] - pts[:-1], axis=1)
    tail_len = max(1, steps.size // 10)
    tail_max = float(steps[-tail_len:].max())
    params = {"tol": tol, "tail_length": tail_len}
    if tail_max <= tol:
        return DiagnosticsReport(
            "check_asymptotic_regularity", PASS, params=params, per_step=steps,
            metadata={"tail_max_step": tail_max},
        )
    idx = steps.size - tail_len + int(np.argmax(steps[-tail_len:]))
    witness = {"step": idx, "step_norm": tail_max}
    return DiagnosticsReport(
        "check_asymptotic_regularity", FAIL, witness, params=params,
        per_step=steps, metadata={"tail_max_step": tail_max},
    )


def check_sum_decoupling(
    trajectory,
    E: ConvexSet,
    K: ConvexSet,
    witnesses: int = 10,
    seed: int = 0,
    tol: float = 1e-10,
) -> DiagnosticsReport:
    """Fejer monotonicity with respect to E + K, decoupled.

    Checks (a) Fejer monotonicity with respect to E and (b) every step lies
    in the dual cone of K.  Where the E + K projector is supported the direct
    Fejer check is run as well and the equivalence verdict is recorded.
    """
    pts = _points_of(trajectory)
    fejer_e = check_fejer(pts, E, witnesses=witnesses, seed=seed, tol=tol)
    steps = pts[1:] - pts[:-1]
    bad_step = None
    for i, s in enumerate(steps):
        if not dual_cone_contains(K, s, tol=tol):
            bad_step = i
            break
    combined_pass = fejer_e.passed and bad_step is None
    direct = None
    try:
        direct = check_fejer(
            pts, MinkowskiSum(E, K), witnesses=witnesses, seed=seed, tol=tol
        )
    except UnsupportedSetError:
        pass
    meta = {
        "semantics": NECESSARY_CONDITION,
        "fejer_vs_summand": fejer_e.verdict,
        "steps_in_dual_cone": bad_step is None,
        "direct_sum_verdict": direct.verdict if direct is not None else None,
        "equivalence_agrees": (
            None if direct is None else combined_pass == direct.passed
        ),
    }
    params = {"witnesses": witnesses, "tol": tol}
    if combined_pass:
        return DiagnosticsReport(
            "check_sum_decoupling", PASS, params=params, seed=seed, metadata=meta
        )
    if not fejer_e.passed:
        witness = dict(fejer_e.witness)
        witness["violated"] = "fejer_vs_summand"
    else:
        witness = {
            "violated": "step_in_dual_cone",
            "step": bad_step,
            "step_vector": steps[bad_step],
        }
    return DiagnosticsReport(
        "check_sum_decoupling", FAIL, witness, params=params, seed=seed,
        metadata=meta,
    )


@dataclass(frozen=True)
class ClusterSet:
    """Greedy ball cover of a trajectory tail.

    Every covered point is within ``radius`` of its representative and the
    representatives are pairwise more than ``radius`` apart.
    ``component_labels`` come from single linkage at threshold 2 * radius.
    """

    representatives: np.ndarray
    radius: float
    component_labels: np.ndarray
    assignment: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max()) + 1


def estimate_cluster_set(
    trajectory,
    tail_fraction: float = 0.5,
    radius: float | None = None,
    tol: float = DEFAULT_TOL,
) -> ClusterSet:
    """Cluster-point estimate from the trajectory tail.

    The default radius is 0.05 * (tail extent + tol) with floor 1e-6, the
    extent being the bounding-box diagonal.  Representatives are chosen
    greedily in trajectory order, so the result is deterministic.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    pts = _points_of(trajectory)
    n_tail = max(1, math.ceil(tail_fraction * pts.shape[0]))
    tail = pts[-n_tail:]
    if radius is None:
        extent = float(np.linalg.norm(tail.max(axis=0) - tail.min(axis=0)))
        radius = max(1e-6, 0.05 * (extent + tol))
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    reps, assignment = greedy_cover(tail, radius)
    labels = single_linkage_labels(reps, 2.0 * radius)
    coverage = np.linalg.norm(tail - reps[assignment], axis=1)
    assert float(coverage.max()) <= radius + 1e-12, "greedy cover broke coverage"
    return ClusterSet(reps, float(radius), labels, assignment)


def check_connectivity(cluster: ClusterSet) -> DiagnosticsReport:
    """The estimated cluster set must form one linkage component."""
    n = cluster.n_components
    params = {"radius": cluster.radius, "threshold": 2.0 * cluster.radius}
    if n == 1:
        return DiagnosticsReport(
            "check_connectivity", PASS, params=params,
            metadata={"components": 1},
        )
    gap = component_gap(cluster.representatives, cluster.component_labels)
    witness = {
        "components": n,
        "gap": gap,
        "representatives": cluster.representatives,
        "labels": cluster.component_labels,
    }
    return DiagnosticsReport(
        "check_connectivity", FAIL, witness, params=params,
        metadata={"components": n, "gap": gap},
    )


def check_cluster_orthogonality(
    cluster: ClusterSet,
    C: ConvexSet,
    witnesses: int = 10,
    seed: int = 0,
    tol: float = 1e-8,
    witness_radius: float | None = None,
) -> DiagnosticsReport:
    """Differences of cluster representatives must be orthogonal to C - C.

    The tolerance is scaled as tol * (1 + |w_i - w_j| * |c - c'|) to avoid
    spurious failures on large witnesses.
    """
    reps = cluster.representatives
    params = {"witnesses": witnesses, "tol": tol}
    if reps.shape[0] < 2:
        return DiagnosticsReport(
            "check_cluster_orthogonality", PASS, params=params, seed=seed,
            metadata={"semantics": NECESSARY_CONDITION, "vacuous": True},
        )
    radius = (
        _auto_witness_radius(reps, C) if witness_radius is None else witness_radius
    )
    ws = np.stack(sample_witnesses(C, witnesses, seed=seed, radius=radius))
    ii, jj = np.triu_indices(reps.shape[0], k=1)
    wdiff = reps[ii] - reps[jj]
    kk, ll = np.triu_indices(ws.shape[0], k=1)
    cdiff = ws[kk] - ws[ll]
    inner = np.abs(wdiff @ cdiff.T)
    scale = 1.0 + np.outer(
        np.linalg.norm(wdiff, axis=1), np.linalg.norm(cdiff, axis=1)
    )
    excess = inner - tol * scale
    meta = {
        "semantics": NECESSARY_CONDITION,
        "worst_excess": float(excess.max()) if excess.size else 0.0,
    }
    if not excess.size or float(excess.max()) <= 0.0:
        return DiagnosticsReport(
            "check_cluster_orthogonality", PASS, params=params, seed=seed,
            metadata=meta,
        )
    p, q = np.unravel_index(int(np.argmax(excess)), excess.shape)
    witness = {
        "representatives": (reps[ii[p]], reps[jj[p]]),
        "witness_pair": (ws[kk[q]], ws[ll[q]]),
        "inner_product": float((wdiff[p] @ cdiff[q])),
    }
    return DiagnosticsReport(
        "check_cluster_orthogonality", FAIL, witness, params=params, seed=seed,
        metadata=meta,
    )


def check_shadow_superset(
    trajectory,
    C: ConvexSet,
    A: ConvexSet,
    tol: float = 1e-6,
    witnesses: int = 10,
    seed: int = 0,
    tail_window: int = 500,
) -> DiagnosticsReport:
    """If the A-shadow clusters inside C, both shadows share one limit.

    Requires C to be contained in A (sanity-checked on sampled witnesses).
    The verdict is INCONCLUSIVE when the cluster hypothesis is unmet or a
    shadow limit cannot be detected at the requested tolerance.
    """
    traj = (
        trajectory
        if isinstance(trajectory, Trajectory)
        else Trajectory(np.asarray(trajectory, dtype=float))
    )
    for w in sample_witnesses(C, witnesses, seed=seed):
        if not A.contains(w, tol=1e-8):
            raise ValueError("C is not contained in A on sampled witnesses")
    shadow_a = shadow(traj, A)
    shadow_c = shadow(traj, C)
    cluster = estimate_cluster_set(shadow_a)
    residuals = np.array(
        [
            float(np.linalg.norm(r - C.project(r)))
            for r in cluster.representatives
        ]
    )
    params = {"tol": tol, "witnesses": witnesses, "tail_window": tail_window}
    if float(residuals.max()) > tol:
        return DiagnosticsReport(
            "check_shadow_superset",
            INCONCLUSIVE,
            {
                "reason": "A-shadow cluster points do not all lie in C",
                "worst_membership_residual": float(residuals.max()),
            },
            params=params,
            seed=seed,
        )
    window = min(tail_window, len(traj))
    la = detect_limit(shadow_a, window, tol)
    lc = detect_limit(shadow_c, window, tol)
    if la.status != CONVERGED or lc.status != CONVERGED:
        return DiagnosticsReport(
            "check_shadow_superset",
            INCONCLUSIVE,
            {
                "reason": "shadow limit not detected at the given tolerance",
                "shadow_A_status": la.status,
                "shadow_C_status": lc.status,
            },
            params=params,
            seed=seed,
        )
    sep = float(np.linalg.norm(la.limit - lc.limit))
    meta = {"limit_separation": sep}
    if sep <= tol:
        return DiagnosticsReport(
            "check_shadow_superset", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "check_shadow_superset",
        FAIL,
        {"limit_A": la.limit, "limit_C": lc.limit, "separation": sep},
        params=params,
        seed=seed,
        metadata=meta,
    )


def check_codim1_theorem(
    C: ConvexSet,
    trajectory=None,
    operator: OperatorExpr | None = None,
    x0=None,
    n_steps: int = 2000,
    witnesses: int = 10,
    seed: int = 0,
    fejer_tol: float = 1e-10,
    ar_tol: float = 1e-9,
    limit_tol: float = DEFAULT_TOL,
    tail_window: int = 500,
) -> DiagnosticsReport:
    """Codimension-1 convergence guarantee as a composite regression check.

    If codim C = 1 and the orbit is Fejer monotone with respect to C and
    asymptotically regular, the orbit must converge; hypotheses holding
    without convergence is a FAIL that signals an implementation bug.
    Unmet hypotheses give INCONCLUSIVE.
    """
    if trajectory is None:
        if operator is None or x0 is None:
            raise ValueError("pass either a trajectory or (operator, x0)")
        trajectory = iterate(operator, x0, n_steps)
    traj = (
        trajectory
        if isinstance(trajectory, Trajectory)
        else Trajectory(np.asarray(trajectory, dtype=float))
    )
    cod = codimension(C, traj.dim)
    fejer = check_fejer(traj, C, witnesses=witnesses, seed=seed, tol=fejer_tol)
    ar = check_asymptotic_regularity(traj, tol=ar_tol)
    meta = {
        "codim": cod.codim,
        "fejer_verdict": fejer.verdict,
        "asymptotic_regularity_verdict": ar.verdict,
    }
    params = {
        "witnesses": witnesses,
        "fejer_tol": fejer_tol,
        "ar_tol": ar_tol,
        "limit_tol": limit_tol,
        "tail_window": tail_window,
    }
    unmet = []
    if cod.codim != 1:
        unmet.append(f"codim is {cod.codim}, not 1")
    if not fejer.passed:
        unmet.append("Fejer monotonicity fails")
    if not ar.passed:
        unmet.append("asymptotic regularity fails")
    if unmet:
        return DiagnosticsReport(
            "check_codim1_theorem",
            INCONCLUSIVE,
            {"reason": "; ".join(unmet)},
            params=params,
            seed=seed,
            metadata=meta,
        )
    limit = detect_limit(traj, min(tail_window, len(traj)), limit_tol)
    meta["limit_status"] = limit.status
    if limit.status == CONVERGED:
        meta["limit"] = limit.limit
        return DiagnosticsReport(
            "check_codim1_theorem", PASS, params=params, seed=seed, metadata=meta
        )
    return DiagnosticsReport(
        "check_codim1_theorem",
        FAIL,
        {
            "reason": "hypotheses hold but the orbit did not converge; "
            "this contradicts the convergence guarantee and signals a bug",
            "limit_status": limit.status,
        },
        params=params,
        seed=seed,
        metadata=meta,
    )
