import math

import numpy as np
import pytest

from rwre_mle.env_model import BetaEnv, ThetaBox, TwoPointFree, TwoPointKnown, sample_env
from rwre_mle.errors import NonFinite
from rwre_mle.estimator_mle import MleOptions, golden_section, maximize, profile_slice
from rwre_mle.likelihood import Criterion
from rwre_mle.rwre_sim import left_step_vector, run_to_hit


def _pairs(family, n, seed):
    rng = np.random.default_rng(seed)
    env = sample_env(family, (-5000, n), rng)
    counts, _ = run_to_hit(env, n, rng)
    return left_step_vector(counts)


def test_golden_section_quadratic():
    x, fx, evals, ok = golden_section(lambda t: -(t - 0.3137) ** 2, 0.0, 1.0, 1e-9, 1000)
    assert ok and abs(x - 0.3137) < 1e-8 and evals < 100


def test_all_zero_pairs_hit_the_edge_with_mass_on_larger_a():
    # l_n(p) = n log(0.4 p + 0.7 (1 - p)) decreases in p, so the argmax is the lower edge
    fam = TwoPointKnown(0.4, 0.7, 0.3)
    res = maximize(Criterion(fam, np.zeros((200, 2), dtype=int)))
    assert res.theta_hat[0] == pytest.approx(fam.box.lower[0], abs=1e-6)
    assert res.on_boundary
    assert res.criterion_at_max == pytest.approx(200 * math.log(0.4 * 1e-3 + 0.7 * (1 - 1e-3)))


@pytest.mark.parametrize("seed", range(20))
def test_golden_matches_dense_grid(seed):
    rng = np.random.default_rng(1000 + seed)
    fam = TwoPointKnown(0.4, 0.7, float(rng.uniform(0.05, 0.5)))
    crit = Criterion(fam, _pairs(fam, int(rng.integers(50, 2000)), seed))
    dense = np.linspace(fam.box.lower[0], fam.box.upper[0], 10_000)
    vals = crit.values(dense[:, None])
    res = maximize(crit)
    assert abs(res.theta_hat[0] - dense[np.argmax(vals)]) < 1e-4
    assert res.criterion_at_max >= vals.max() - 1e-9


def test_shift_invariance_is_bitwise(ex3):
    crit = Criterion(ex3, _pairs(ex3, 1000, 3))
    a = maximize(crit)
    b = maximize(crit.with_shift(0.25))
    assert a.theta_hat.tobytes() == b.theta_hat.tobytes()
    assert a.evaluations == b.evaluations
    assert b.criterion_at_max == a.criterion_at_max + 0.25 * crit.n


def test_deterministic(ex2):
    crit = Criterion(ex2, _pairs(ex2, 1000, 4))
    assert maximize(crit).theta_hat.tobytes() == maximize(crit).theta_hat.tobytes()


@pytest.mark.parametrize("family", [TwoPointFree(0.3, 0.4, 0.7), BetaEnv(5.0, 1.0)])
def test_refinement_never_worse_than_grid(family):
    crit = Criterion(family, _pairs(family, 2000, 5))
    res = maximize(crit)
    assert res.criterion_at_max >= crit(res.grid_stage_argmax)
    assert res.criterion_at_max == pytest.approx(crit(res.theta_hat))
    assert np.all(np.diff(res.best_history) >= 0)
    assert family.box.contains(res.theta_hat) and family.feasible(res.theta_hat)


def test_beta_estimate_respects_feasibility():
    fam = BetaEnv(5.0, 1.0)
    res = maximize(Criterion(fam, _pairs(fam, 3000, 6)))
    assert res.theta_hat[0] >= res.theta_hat[1] + 1


def test_nonfinite_when_box_infeasible():
    fam = BetaEnv(5.0, 1.0)
    box = ThetaBox(("alpha", "beta"), (1.2, 2.0), (2.0, 3.0))
    with pytest.raises(NonFinite):
        maximize(Criterion(fam, [[0, 1]]), box)


def test_max_evals_bounds_refinement(ex2):
    crit = Criterion(ex2, _pairs(ex2, 500, 7))
    res = maximize(crit, options=MleOptions(grid_points=4, max_evals=30))
    assert res.evaluations <= 4**3 + 30 + 4


def test_profile_slice_endpoints(ex1):
    crit = Criterion(ex1, _pairs(ex1, 500, 8))
    sl = profile_slice(crit, ex1.box, 0, 2, center=[0.3])
    assert sl[:, 0].tolist() == [ex1.box.lower[0], ex1.box.upper[0]]


def test_profile_slice_concave(ex1):
    crit = Criterion(ex1, _pairs(ex1, 2000, 9))
    sl = profile_slice(crit, ex1.box, 0, 201)
    assert np.all(np.diff(sl[:, 1], 2) <= 1e-9)


def test_profile_slice_bad_axis(ex1):
    with pytest.raises(ValueError):
        profile_slice(Criterion(ex1, [[0, 0]]), ex1.box, 1, 5, center=[0.3])
