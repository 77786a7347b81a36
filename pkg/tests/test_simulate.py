import numpy as np
import pytest

from mhpbayes.background import ConstantBackground, ErlangMixtureBackground
from mhpbayes.baselines import EtasExcitation, LomaxKernel
from mhpbayes.excitation import BasisGrid, h0_matrix
from mhpbayes.kernels import seeded_rng
from mhpbayes.marks import TruncatedExponentialMarks
from mhpbayes.sampler.common import check_branching
from mhpbayes.simulate import (GeneratorSpec, SimulationError, cluster_sizes, continue_process, nonpar_spec,
                               posterior_predictive_counts, scenario, simulate_mhp, simulate_nhpp)

from conftest import assert_mean_within


def poisson_spec(mu=0.01, T=5000.0):
    return GeneratorSpec(ConstantBackground(mu), EtasExcitation(0.0, 0.5, 4.0, LomaxKernel.lomax(2.0, 1.0)),
                         TruncatedExponentialMarks(1.0, 4.0, 10.0), T)


class TestScenarios:
    def test_rho_values(self):
        assert abs(scenario("lomax").rho - 0.8954) < 1e-3
        assert abs(scenario("mark-lomax").rho - 0.8906) < 1e-3
        assert scenario("lomax-mixture").rho == pytest.approx(scenario("mark-lomax").rho)

    def test_unknown(self):
        with pytest.raises(KeyError):
            scenario("nope")

    def test_unstable_refused(self):
        spec = scenario("lomax", a=0.6)
        assert spec.rho >= 1
        with pytest.raises(SimulationError, match="rho"):
            simulate_mhp(spec)

    def test_deterministic(self):
        a, ya = simulate_mhp(scenario("mark-lomax", seed=5))
        b, yb = simulate_mhp(scenario("mark-lomax", seed=5))
        np.testing.assert_array_equal(a.pattern.times, b.pattern.times)
        np.testing.assert_array_equal(ya, yb)

    def test_explosion_guard(self):
        with pytest.raises(SimulationError, match="explosion"):
            simulate_mhp(scenario("mark-lomax", max_events=20))

    def test_quadrature_rho_fallback(self):
        from mhpbayes.marks import BetaMarks
        from mhpbayes.simulate import branching_ratio

        exc = EtasExcitation(0.3, 0.5, 4.0, LomaxKernel.lomax(2.0, 1.0))
        f = BetaMarks(1.0, 1.0, 4.0, 10.0)
        assert branching_ratio(exc, f) == pytest.approx(0.3 * (np.exp(3.0) - 1.0) / 3.0, rel=1e-8)


class TestStructure:
    @pytest.mark.parametrize("name", ["lomax", "mark-lomax", "lomax-mixture"])
    def test_valid_branching(self, name):
        lab, y = simulate_mhp(scenario(name, seed=11, T=2000.0))
        check_branching(y)
        t = lab.pattern.times
        assert np.all(np.diff(t) > 0)
        off = y > 0
        assert np.all(t[off] > t[y[off] - 1])
        assert list(lab.labels) == ["main" if v == 0 else "aftershock" for v in y]

    def test_no_immigrants(self):
        lab, y = simulate_mhp(poisson_spec(mu=0.0))
        assert lab.n == 0 and y.size == 0

    def test_poisson_counts(self):
        spec = poisson_spec()
        rng = seeded_rng(1)
        counts = [simulate_mhp(spec, rng)[0].n for _ in range(10**4)]
        assert_mean_within(counts, 50.0)

    def test_cluster_sizes(self):
        y = np.array([0, 1, 1, 0, 2, 5])
        np.testing.assert_array_equal(cluster_sizes(y), [4, 0])

    def test_nonpar_generator(self):
        grid = BasisGrid(5, 3, 0.2, 1.0)
        nu = h0_matrix(5, 3, 0.2, 1.0, 0.5)
        spec = nonpar_spec(nu, grid, ConstantBackground(0.05), 2.0, 3.0, 2000.0, 4.0, 10.0, seed=3)
        assert 0 < spec.rho < 1
        rng = seeded_rng(3)
        counts = [simulate_mhp(spec, rng)[0].n for _ in range(2000)]
        assert_mean_within(counts, 0.05 * 2000 / (1 - spec.rho), k=5)


class TestThinning:
    def test_constant(self, rng):
        counts = [simulate_nhpp(lambda t: np.full(t.shape, 0.3), 0.3, 0.0, 100.0, rng).size for _ in range(5000)]
        assert_mean_within(counts, 30.0)

    def test_zero(self, rng):
        assert simulate_nhpp(lambda t: 0 * t, 0.0, 0.0, 10.0, rng).size == 0

    def test_bound_violation(self, rng):
        with pytest.raises(ValueError):
            simulate_nhpp(lambda t: np.full(t.shape, 2.0), 1.0, 0.0, 100.0, rng)

    def test_erlang_mixture(self, rng):
        bg = ErlangMixtureBackground(2.0, seeded_rng(9).gamma(2.0, 1.0, 10))
        counts = [simulate_nhpp(bg.mu_of_t, bg.upper_bound(), 0.0, 30.0, rng).size for _ in range(10**4)]
        assert_mean_within(counts, bg.integrated(30.0))


class _Chain:
    """Minimal stand-in for a fitted chain with a fixed process per snapshot."""

    def __init__(self, procs):
        self.procs = procs

    def __len__(self):
        return len(self.procs)

    def process_at(self, s):
        return self.procs[s]


class TestPredictive:
    def test_poisson_mixture(self):
        rng = seeded_rng(2)
        mus = rng.gamma(50.0, 1 / 5000.0, size=3000)
        zero = EtasExcitation(0.0, 0.5, 4.0, LomaxKernel.lomax(2.0, 1.0))
        marks = TruncatedExponentialMarks(1.0, 4.0)
        chain = _Chain([(ConstantBackground(m), zero, marks) for m in mus])
        from mhpbayes.catalog import MarkedPointPattern

        hist = MarkedPointPattern([1.0, 2.0], [5.0, 6.0], 100.0, 4.0)
        counts = posterior_predictive_counts(chain, hist, 600.0, seed=4)
        assert_mean_within(counts, 500.0 * mus.mean())
        # Poisson mixture variance: E[mu] H + Var[mu] H^2
        var = 500.0 * mus.mean() + mus.var() * 500.0**2
        assert abs(counts.var() - var) < 0.15 * var

    def test_overlap_rejected(self):
        from mhpbayes.catalog import MarkedPointPattern

        hist = MarkedPointPattern([1.0], [5.0], 100.0, 4.0)
        with pytest.raises(ValueError):
            posterior_predictive_counts(_Chain([]), hist, 50.0)
        with pytest.raises(ValueError):
            posterior_predictive_counts(_Chain([]), hist, 200.0, start=90.0)

    def test_history_offspring_windows(self, rng):
        spec = scenario("mark-lomax")
        t, k = continue_process(rng, ConstantBackground(0.0), spec.excitation, spec.marks,
                                np.array([99.9]), np.array([9.5]), 100.0, 101.0)
        assert np.all((t >= 100.0) & (t <= 101.0))

    def test_empty_history_reduces_to_simulation(self):
        spec = scenario("mark-lomax", T=1000.0)
        counts_c = [continue_process(seeded_rng(s), spec.background, spec.excitation, spec.marks,
                                     np.zeros(0), np.zeros(0), 0.0, 1000.0)[0].size for s in range(600)]
        counts_s = [simulate_mhp(spec, seeded_rng(10**6 + s))[0].n for s in range(600)]
        diff = np.mean(counts_c) - np.mean(counts_s)
        se = np.sqrt(np.var(counts_c) / 600 + np.var(counts_s) / 600)
        assert abs(diff) < 4 * se
