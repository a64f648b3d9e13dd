import numpy as np
import pytest
import scipy.sparse as sp

from premarshal.lp import Infeasible, LpProblem, Unbounded, certify, lp_solve


def test_small_lp_duals_and_certificate():
    # min x0 + 2 x1  s.t.  x0 + x1 >= 1,  x1 <= 3,  x0 - x1 = 0
    A = sp.csr_matrix([[1.0, 1.0], [0.0, 1.0], [1.0, -1.0]])
    prob = LpProblem([1.0, 2.0], A, [">=", "<=", "="], [1.0, 3.0, 0.0])
    res = lp_solve(prob)
    assert res.objective_value == pytest.approx(1.5)
    assert res.primal == pytest.approx([0.5, 0.5])
    assert res.duals[0] == pytest.approx(1.5)
    assert res.duals[1] <= 1e-12
    cert = certify(prob, res)
    assert cert.ok(res.objective_value)
    assert "x1 <= 3" in prob.dump()


def test_errors():
    A = sp.csr_matrix([[1.0]])
    with pytest.raises(Infeasible):
        lp_solve(LpProblem([1.0], A, ["<="], [-1.0]))
    with pytest.raises(Unbounded):
        lp_solve(LpProblem([-1.0], A, [">="], [0.0]))
    with pytest.raises(ValueError):
        LpProblem([1.0], A, ["<"], [0.0])
    with pytest.raises(ValueError):
        LpProblem([1.0, 2.0], A, ["<="], [0.0])
    with pytest.raises(ValueError):
        LpProblem([np.inf], A, ["<="], [0.0])


def test_random_lps_certify():
    rng = np.random.default_rng(0)
    for _ in range(30):
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        A = sp.csr_matrix(rng.integers(-1, 3, size=(m, n)).astype(float))
        senses = list(rng.choice([">=", "<="], size=m))
        x0 = rng.random(n)
        rhs = A @ x0 + np.where(np.array(senses) == ">=", -0.1, 0.1)
        prob = LpProblem(rng.random(n) + 0.1, A, senses, rhs)
        res = lp_solve(prob)
        assert certify(prob, res).ok(res.objective_value)


def test_certificate_flags_a_wrong_dual():
    A = sp.csr_matrix([[1.0]])
    prob = LpProblem([1.0], A, [">="], [1.0])
    res = lp_solve(prob)
    res.duals = np.array([-1.0])
    assert not certify(prob, res).ok(res.objective_value)
