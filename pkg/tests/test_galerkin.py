import math

import numpy as np
import pytest

from nghjb.errors import NotPositiveDefinite
from nghjb.galerkin import (
    GalerkinSystem,
    assemble_closed,
    assemble_quadrature,
    integrate,
    mass_matrix_discrepancy,
    solve_step_direction,
)
from nghjb.model import MarketParams
from nghjb.trial import TrialState, evolve, initial_params, rate_constants


def test_closed_system_structure():
    mp = MarketParams(n=2, k=1.0)
    s = initial_params(mp)  # alpha = 2
    sys = assemble_closed(mp, s)
    a2 = 4.0
    np.testing.assert_allclose(sys.m, a2 * np.diag([1.0, 0.25, 0.5]), rtol=1e-14)
    rc = rate_constants(mp)
    np.testing.assert_allclose(
        sys.v, a2 * np.array([rc.c_alpha, 0.25 * rc.c_beta, 0.5 * rc.c_zeta]), rtol=1e-14
    )
    assert sys.size == 3


def test_closed_system_printed_m33_variant():
    mp = MarketParams(n=2, k=1.0)
    s = initial_params(mp)
    printed = assemble_closed(mp, s, paper_m33=True)
    assert printed.m[2, 2] == pytest.approx(0.25 * 4.0, rel=1e-14)
    # load vector is shared; only the mass entry moves
    np.testing.assert_allclose(printed.v, assemble_closed(mp, s).v, rtol=0)


def test_step_direction_recovers_rates():
    # M and V are both proportional to alpha^2, so the direction is the
    # rate-constant vector independent of the state
    for n in (0, 1, 2):
        mp = MarketParams(n=n, k=1.0 if n else 0.0)
        s = evolve(initial_params(mp), rate_constants(mp), 0.37)
        rc = rate_constants(mp)
        want = [rc.c_alpha, rc.c_beta] + ([rc.c_zeta] if n else [])
        got = solve_step_direction(assemble_closed(mp, s))
        np.testing.assert_allclose(got, want, rtol=1e-12)


def test_step_direction_paper_variant_scales_zeta_rate():
    mp = MarketParams(n=2, k=1.0)
    s = initial_params(mp)
    got = solve_step_direction(assemble_closed(mp, s, paper_m33=True))
    rc_paper = rate_constants(mp, "paper")
    np.testing.assert_allclose(
        got, [rc_paper.c_alpha, rc_paper.c_beta, rc_paper.c_zeta], rtol=1e-12
    )


def test_step_direction_rejects_indefinite_matrix():
    bad = GalerkinSystem(np.diag([1.0, -1.0]), np.array([1.0, 1.0]))
    with pytest.raises(NotPositiveDefinite):
        solve_step_direction(bad)


def test_step_direction_regularization():
    sys = GalerkinSystem(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    np.testing.assert_allclose(solve_step_direction(sys), [1.0, 1.0], rtol=1e-14)
    np.testing.assert_allclose(
        solve_step_direction(sys, eps_reg=2.0), [0.5, 2.0 / 3.0], rtol=1e-14
    )


def test_quadrature_assembler_matches_closed():
    mp = MarketParams(n=1, k=1.0)
    s = evolve(initial_params(mp), rate_constants(mp), 0.5)
    quad = assemble_quadrature(mp, s)
    closed = assemble_closed(mp, s)
    np.testing.assert_allclose(quad.m, closed.m, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(quad.v, closed.v, rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("assembler", ["closed", "quadrature"])
@pytest.mark.parametrize("method", ["rk4", "euler"])
def test_integrate_reproduces_log_linear_flow(assembler, method):
    # the projected flow has constant direction, so both steppers are exact
    # up to rounding
    mp = MarketParams(n=1, k=1.0)
    s0 = initial_params(mp)
    traj = integrate(mp, s0, 0.3, 0.05, assembler=assembler, method=method)
    want = evolve(s0, rate_constants(mp), 0.3)
    np.testing.assert_allclose(
        traj.final.as_array(), want.as_array(), rtol=0, atol=1e-12
    )


def test_integrate_trajectory_bookkeeping():
    mp = MarketParams()
    s0 = initial_params(mp)
    traj = integrate(mp, s0, 1.0, 0.3)  # 1.0 is not a multiple of 0.3
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0], rtol=1e-15)
    assert traj.states[0] == s0
    assert traj.final is traj.states[-1]
    assert len(traj.states) == len(traj.times)


def test_integrate_t_zero():
    mp = MarketParams()
    s0 = initial_params(mp)
    traj = integrate(mp, s0, 0.0, 0.1)
    assert list(traj.times) == [0.0]
    assert traj.final == s0


def test_integrate_paper_mode_tracks_paper_rates():
    mp = MarketParams(n=2, k=1.0)
    s0 = initial_params(mp)
    traj = integrate(mp, s0, 1.0, 0.125, paper_m33=True)
    want = evolve(s0, rate_constants(mp, "paper"), 1.0)
    np.testing.assert_allclose(traj.final.as_array(), want.as_array(), atol=1e-12)
    # and differs from the oracle flow in the zeta component only
    oracle = evolve(s0, rate_constants(mp, "oracle"), 1.0)
    assert traj.final.log_zeta == pytest.approx(2.0 * oracle.log_zeta, rel=1e-10)
    assert traj.final.log_alpha == pytest.approx(oracle.log_alpha, abs=1e-12)


def test_integrate_rejects_unknowns():
    mp = MarketParams()
    s0 = initial_params(mp)
    with pytest.raises(ValueError):
        integrate(mp, s0, 1.0, 0.1, method="heun")
    with pytest.raises(ValueError):
        integrate(mp, s0, 1.0, 0.1, assembler="magic")
    with pytest.raises(ValueError):
        integrate(mp, s0, 1.0, -0.1)


def test_integrate_callable_assembler():
    mp = MarketParams()
    s0 = initial_params(mp)
    calls = []

    def assembler(mp_, state):
        calls.append(state)
        return assemble_closed(mp_, state)

    traj = integrate(mp, s0, 0.2, 0.1, assembler=assembler, method="euler")
    assert calls  # the callable route was exercised
    want = evolve(s0, rate_constants(mp), 0.2)
    np.testing.assert_allclose(traj.final.as_array(), want.as_array(), atol=1e-13)


def test_discrepancy_record():
    s1 = initial_params(MarketParams(n=1, k=1.0))
    assert mass_matrix_discrepancy(MarketParams(n=1, k=1.0), s1) is None
    mp = MarketParams(n=2, k=1.0)
    rec = mass_matrix_discrepancy(mp, initial_params(mp))
    assert rec["entry"] == "M[2,2]"
    assert rec["ratio"] == pytest.approx(2.0, rel=1e-10)
    assert rec["quadrature"] == pytest.approx(2.0 * rec["printed"], rel=1e-10)
