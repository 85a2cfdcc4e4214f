import numpy as np
import pytest
from scipy.optimize import minimize

from orbtour.qp import (ConvexSubproblem, ReducedArcSolver, RiccatiCache,
                        qp_objective, rollout_linear, solve_convex_subproblem)


def random_subproblem(rng, N=5, ball=10.0, trust=100.0, r_weight=1e-3,
                      coast=()):
    """Small random instance: stable-ish dynamics, PSD weights."""
    A = np.stack([np.eye(7) + 0.05 * rng.standard_normal((7, 7)) for _ in range(N)])
    B = np.stack([0.3 * rng.standard_normal((7, 3)) for _ in range(N)])
    c = 0.01 * rng.standard_normal((N, 7))
    P = np.diag(rng.uniform(0.5, 3.0, 7))
    z_ref = rng.standard_normal(7)
    R = r_weight * np.eye(3)
    balls = np.full(N, float(ball))
    for i in coast:
        balls[i] = 0.0
    return ConvexSubproblem(A=A, B=B, c=c, P=P, z_ref=z_ref, R=R, ball=balls,
                            trust=np.full(7, float(trust)))


def dense_kkt_solution(sub: ConvexSubproblem):
    """Oracle: stack the equality-constrained QP into one dense KKT system
    (valid when the inequality constraints are slack)."""
    N = sub.n_stages
    nz, nu = 7 * (N + 1), 3 * N
    H = np.zeros((nz + nu, nz + nu))
    g = np.zeros(nz + nu)
    H[7 * N:7 * N + 7, 7 * N:7 * N + 7] = sub.P
    g[7 * N:7 * N + 7] = -sub.P @ sub.z_ref
    for i in range(N):
        H[nz + 3 * i:nz + 3 * i + 3, nz + 3 * i:nz + 3 * i + 3] = sub.R
    # equality constraints: z_0 = z0; z_{i+1} - A z_i - B u_i = c_i
    ne = 7 * (N + 1)
    E = np.zeros((ne, nz + nu))
    d = np.zeros(ne)
    E[:7, :7] = np.eye(7)
    d[:7] = sub.z0
    for i in range(N):
        r = 7 * (i + 1)
        E[r:r + 7, 7 * (i + 1):7 * (i + 2)] = np.eye(7)
        E[r:r + 7, 7 * i:7 * (i + 1)] = -sub.A[i]
        E[r:r + 7, nz + 3 * i:nz + 3 * i + 3] = -sub.B[i]
        d[r:r + 7] = sub.c[i]
    KKT = np.block([[H, E.T], [E, np.zeros((ne, ne))]])
    rhs = np.concatenate([-g, d])
    sol = np.linalg.solve(KKT, rhs)
    Z = sol[:nz].reshape(N + 1, 7)
    U = sol[nz:nz + nu].reshape(N, 3)
    return Z, U, qp_objective(sub, Z, U)


def test_all_coast_returns_rollout():
    rng = np.random.default_rng(0)
    sub = random_subproblem(rng, N=6, coast=range(6))
    sol = solve_convex_subproblem(sub, max_iter=50)
    assert np.all(sol.controls == 0.0)
    assert np.allclose(sol.states, rollout_linear(sub, sol.controls), atol=1e-12)
    err = sol.states[-1] - sub.z_ref
    assert sol.objective == pytest.approx(0.5 * err @ sub.P @ err, rel=1e-12)


def test_huge_control_penalty_drives_controls_to_zero():
    rng = np.random.default_rng(1)
    sub = random_subproblem(rng, N=5, r_weight=1e9)
    sub.P = 1e-6 * np.eye(7)
    sol = solve_convex_subproblem(sub, max_iter=2000, tol=1e-12)
    assert np.max(np.abs(sol.controls)) < 1e-6


def test_matches_dense_kkt_oracle_when_constraints_slack():
    rng = np.random.default_rng(2)
    for trial in range(3):
        sub = random_subproblem(rng, N=5, ball=1e6, trust=1e6)
        want_Z, want_U, want_obj = dense_kkt_solution(sub)
        sol = solve_convex_subproblem(sub, max_iter=20000, tol=1e-12)
        assert sol.objective == pytest.approx(want_obj, rel=1e-6, abs=1e-9)
        assert np.allclose(sol.controls, want_U, atol=1e-5)


def test_matches_slsqp_oracle_with_active_balls():
    rng = np.random.default_rng(3)
    sub = random_subproblem(rng, N=4, ball=0.05, r_weight=1e-3)

    def pack_obj(u_flat):
        U = u_flat.reshape(4, 3)
        Z = rollout_linear(sub, U)
        return qp_objective(sub, Z, U)

    cons = [{"type": "ineq",
             "fun": (lambda u_flat, i=i:
                     sub.ball[i]**2 - np.sum(u_flat[3 * i:3 * i + 3]**2))}
            for i in range(4)]
    ref = minimize(pack_obj, np.zeros(12), method="SLSQP", constraints=cons,
                   options={"maxiter": 500, "ftol": 1e-14})
    sol = solve_convex_subproblem(sub, max_iter=40000, tol=1e-12)
    assert sol.objective == pytest.approx(ref.fun, rel=1e-5)
    norms = np.linalg.norm(sol.controls, axis=1)
    assert np.all(norms <= sub.ball + 1e-12)


def test_equality_residual_is_zero_and_balls_exact():
    rng = np.random.default_rng(4)
    sub = random_subproblem(rng, N=8, ball=0.02, coast=(2, 3))
    sol = solve_convex_subproblem(sub, max_iter=3000, tol=1e-10)
    Z, U = sol.states, sol.controls
    for i in range(8):
        resid = Z[i + 1] - (sub.A[i] @ Z[i] + sub.B[i] @ U[i] + sub.c[i])
        assert np.max(np.abs(resid)) < 1e-9
    assert np.all(np.linalg.norm(U, axis=1) <= sub.ball + 1e-15)
    assert np.all(U[[2, 3]] == 0.0)


def test_trust_box_projection_active():
    rng = np.random.default_rng(5)
    sub = random_subproblem(rng, N=5, ball=1e6, trust=1e-3)
    sol = solve_convex_subproblem(sub, max_iter=4000, tol=1e-10)
    assert sol.trust_active
    # the box-constrained optimum costs at least the unconstrained one
    _, _, free_obj = dense_kkt_solution(sub)
    assert sol.objective >= free_obj - 1e-9


def test_warm_start_reduces_iterations():
    rng = np.random.default_rng(6)
    sub = random_subproblem(rng, N=6, ball=0.05)
    first = solve_convex_subproblem(sub, max_iter=20000, tol=1e-11)
    again = solve_convex_subproblem(sub, max_iter=20000, tol=1e-11,
                                    warm=first.duals)
    assert again.iterations <= first.iterations


def test_reduced_solver_matches_general_path():
    rng = np.random.default_rng(7)
    # diagonal P and scalar R: the condensed solver's assumptions
    for coast, ball in (((), 1e6), ((1, 4), 0.03)):
        sub = random_subproblem(rng, N=6, ball=ball, trust=1e9, r_weight=1e-3,
                                coast=coast)
        sub.P = np.diag(rng.uniform(0.5, 2.0, 7))
        general = solve_convex_subproblem(sub, max_iter=60000, tol=1e-13)
        reduced = ReducedArcSolver(sub).solve(tol=1e-13)
        assert reduced.objective == pytest.approx(general.objective,
                                                  rel=1e-5, abs=1e-9)
        assert np.all(np.linalg.norm(reduced.controls, axis=1)
                      <= sub.ball + 1e-12)


def test_riccati_cache_reusable_across_trust_changes():
    rng = np.random.default_rng(8)
    sub = random_subproblem(rng, N=5, ball=0.05)
    cache = RiccatiCache(sub, rho=1.0)
    a = solve_convex_subproblem(sub, max_iter=5000, tol=1e-11, cache=cache)
    sub2 = ConvexSubproblem(A=sub.A, B=sub.B, c=sub.c, P=sub.P, z_ref=sub.z_ref,
                            R=sub.R, ball=sub.ball, trust=sub.trust * 0.5)
    b = solve_convex_subproblem(sub2, max_iter=5000, tol=1e-11, cache=cache)
    assert np.isfinite(b.objective)
