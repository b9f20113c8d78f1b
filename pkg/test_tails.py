"""Tests for Monte-Carlo tail estimation, oracles, fits and the block check."""

import math
import warnings

import numpy as np
import pytest

TRIALS = 3000


def _renewal(p=3.0, N=10_000):
    from chains.kernels import renewal_chain
    return renewal_chain(p, N)


def _estimate(n, x, p_hat, hits=1000, trials=10**6):
    from tails.estimate import Statistic, TailEstimate
    return TailEstimate(n=n, x=x, hits=hits, trials=trials, p_hat=p_hat,
                        ci_low=p_hat, ci_high=p_hat, statistic=Statistic.MAX_ABS_PARTIAL_SUM)


def test_wilson_interval():
    """0 <= low <= p_hat <= high <= 1, including the edge counts."""
    from tails.estimate import wilson_interval

    for hits, trials in ((0, 100), (1, 100), (50, 100), (100, 100), (3, 10**6)):
        low, high = wilson_interval(hits, trials)
        assert 0.0 <= low <= hits / trials <= high <= 1.0
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0
    low, high = wilson_interval(50, 100)
    print(f"  Wilson(50/100) = [{low:.4f}, {high:.4f}]")
    assert abs(low - 0.4038) < 1e-3 and abs(high - 0.5962) < 1e-3


def test_estimate_row_fields():
    from tails.estimate import TAIL_CSV_COLUMNS, Statistic, TailEstimate

    est = TailEstimate.from_counts(100, 2.5, 7, 1000, Statistic.ABS_SUM, chain="renewal", p=3.0, seed=4)
    row = est.to_row()
    assert list(row) == TAIL_CSV_COLUMNS
    assert row["gamma"] == ""
    back = TailEstimate.from_row(row)
    assert back == est


def test_dp_sum_tail_examples():
    from chains.errors import DomainError, SizeError
    from tails.oracle import dp_sum_tail

    assert dp_sum_tail([0.5, 0.5], 2, 4) == pytest.approx(0.25)
    assert dp_sum_tail([0.5, 0.5], 2, 3) == pytest.approx(0.75)
    assert dp_sum_tail([0.5, 0.5], 2, 2) == 1.0
    assert dp_sum_tail([0.5, 0.5], 2, 5) == 0.0
    with pytest.raises(DomainError):
        dp_sum_tail([0.5, 0.4], 2, 3)
    with pytest.raises(SizeError):
        dp_sum_tail(np.full(1000, 1e-3), 10**5, 10**5 + 1)


def test_oracle_agrees_with_monte_carlo():
    """Sampled excursion sums match exact convolution."""
    from chains.excursions import TabulatedExcursions, truncated_tau_pmf
    from tails.estimate import Statistic, estimates_from_extremes
    from tails.montecarlo import excursion_sum_samples
    from tails.oracle import dp_sum_tail

    law = _renewal(3.0, 1000).law
    pmf = truncated_tau_pmf(law, 50)
    source = TabulatedExcursions(pmf)
    n = 6
    sums = np.rint(excursion_sum_samples(source, n, 20_000, seed=11) + n * source.mean_length)
    thresholds = list(range(8, 28))
    estimates = estimates_from_extremes(sums, n, thresholds, Statistic.EXCURSION_SUM)
    inside = 0
    for t, est in zip(thresholds, estimates):
        exact = dp_sum_tail(pmf, n, t)
        inside += abs(est.p_hat - exact) <= 3 * max(est.half_width, 1e-12)
    print(f"  {inside}/{len(thresholds)} thresholds within 3 half-widths")
    assert inside >= 18


def test_segment_statistics_brute_force():
    """Segment extremes equal the maximum over an explicit cumulative sum."""
    from tails.estimate import Statistic
    from tails.montecarlo import segment_statistics

    rng = np.random.default_rng(0)
    values = rng.normal(size=(50, 12))
    lengths = rng.integers(2, 6, size=(50, 12))
    n = 20
    expanded = [np.repeat(v, l)[:n] for v, l in zip(values, lengths)]
    sums = [np.cumsum(e) for e in expanded]

    got = segment_statistics(values, lengths, n, Statistic.MAX_ABS_PARTIAL_SUM)
    assert np.allclose(got, [np.max(np.abs(s)) for s in sums])
    got = segment_statistics(values, lengths, n, Statistic.FUNCTIONAL)
    assert np.allclose(got, [s[-1] for s in sums])
    got = segment_statistics(values, lengths, n, Statistic.ABS_SUM)
    assert np.allclose(got, [abs(s[-1]) for s in sums])


def test_mc_tail_trivial_levels():
    """x = 0 gives 1; x beyond 2 ||f|| n gives 0; hits are nonincreasing."""
    from tails.montecarlo import mc_tail

    chain = _renewal()
    n = 200
    f_inf = chain.default_observable().sup_norm
    grid = [0.0, 2.0, 5.0, 10.0, 2.0 * f_inf * n + 1.0]
    estimates = mc_tail(chain, None, n, grid, TRIALS, seed=1)
    assert estimates[0].p_hat == 1.0
    assert estimates[-1].p_hat == 0.0
    hits = [est.hits for est in estimates]
    assert hits == sorted(hits, reverse=True)
    for est in estimates:
        assert 0.0 <= est.ci_low <= est.p_hat <= est.ci_high <= 1.0
        assert est.chain == "renewal" and est.seed == 1


def test_mc_tail_time_loop_chain():
    """Chains without a segment representation go through the time loop."""
    from chains.kernels import doubling_chain
    from tails.montecarlo import mc_tail

    estimates = mc_tail(doubling_chain(), None, 50, [0.0, 1.0, 26.0], 500, seed=2, statistic="abs_sum")
    assert estimates[0].p_hat == 1.0
    assert estimates[-1].p_hat == 0.0


def test_mc_tail_harris_segments():
    from chains.kernels import harris_chain
    from tails.montecarlo import mc_tail

    estimates = mc_tail(harris_chain(2.0), None, 500, [0.0, 10.0, 1000.0], 1000, seed=3)
    assert estimates[0].p_hat == 1.0
    assert estimates[1].hits > 0
    assert estimates[2].p_hat == 0.0


def test_mc_tail_deterministic_across_workers():
    """Equal seeds give identical estimates for any worker count."""
    from tails.montecarlo import mc_tail

    chain = _renewal()
    grid = [1.0, 5.0, 20.0]
    one = mc_tail(chain, None, 300, grid, 5000, seed=42, workers=1)
    two = mc_tail(chain, None, 300, grid, 5000, seed=42, workers=2)
    assert [e.to_row() for e in one] == [e.to_row() for e in two]
    other = mc_tail(chain, None, 300, grid, 5000, seed=43, workers=1)
    assert [e.hits for e in other] != [e.hits for e in one]


def test_mc_tail_errors():
    from chains.errors import DomainError, UsageError
    from tails.montecarlo import mc_tail

    chain = _renewal()
    with pytest.raises(DomainError):
        mc_tail(chain, None, 10, [1.0], 10, seed=0)
    with pytest.raises(DomainError):
        mc_tail(chain, None, 10, [2.0, 1.0], 100, seed=0)
    with pytest.raises(UsageError):
        mc_tail(chain, None, 10, [1.0], 100, seed=0, statistic="functional")


def test_unit_weight_functional_equals_abs_sum():
    """K = S_n when every weight is 1, so the tails coincide at equal seeds."""
    from tails.montecarlo import mc_tail, young_functional_tail

    chain = _renewal()
    n = 150
    grid = [0.5, 2.3, 7.7]
    abs_sum = mc_tail(chain, None, n, grid, TRIALS, seed=9, statistic="abs_sum")
    functional = young_functional_tail(chain, np.ones(n), None, n, grid, TRIALS, seed=9, centering="exact")
    assert [e.hits for e in functional.estimates] == [e.hits for e in abs_sum]
    assert functional.center == 0.0


def test_functional_estimated_center():
    from tails.montecarlo import young_functional_tail

    chain = _renewal()
    n = 100
    result = young_functional_tail(chain, np.full(n, 0.5), None, n, [1.0, 3.0], TRIALS, seed=5)
    assert result.centering == "estimated"
    assert result.center_stderr > 0
    assert abs(result.center) < 5 * result.center_stderr


def test_functional_time_loop_weights():
    """Non-constant weights run the per-step loop."""
    from tails.montecarlo import young_functional_tail

    chain = _renewal()
    n = 60
    weights = 1.0 / np.arange(1, n + 1)
    result = young_functional_tail(chain, weights, None, n, [0.0, 100.0], 500, seed=6, centering="exact")
    assert result.estimates[-1].p_hat == 0.0


def test_functional_time_loop_keeps_sign():
    """Unit weights on a chain without segments: the sums straddle 0 and center there."""
    from chains.kernels import doubling_chain
    from chains.observables import identity_observable
    from tails.montecarlo import weighted_sums, young_functional_tail

    chain = doubling_chain()
    n = 50
    sums = weighted_sums(chain, identity_observable(), np.ones(n), 2000, np.random.default_rng(12))
    assert sums.min() < 0.0 < sums.max()

    result = young_functional_tail(chain, np.ones(n), None, n, [0.5, 1.0, 2.0], 2000, seed=12)
    print(f"  center {result.center:.4f} +/- {result.center_stderr:.4f}")
    assert abs(result.center) < 5 * result.center_stderr


def test_excursion_sum_tail():
    from chains.errors import DomainError
    from chains.excursions import HarrisExcursions
    from chains.laws import HarrisParams
    from tails.montecarlo import excursion_sum_tail

    source = HarrisExcursions(HarrisParams(3.0))
    est = excursion_sum_tail(source, 100, 0.0, 2000, seed=8)
    print(f"  P(sum tau >= n E tau) = {est.p_hat:.3f}")
    assert 0.2 < est.p_hat < 0.7
    with pytest.raises(DomainError):
        excursion_sum_tail(source, 100, -1.0, 2000, seed=8)


def test_scaling_fit_synthetic():
    """p_hat = n x^-3 recovers slope -3; unusable points are excluded and flagged."""
    from chains.errors import DomainError, FitError, UsageError
    from tails.fitting import scaling_fit

    n = 10_000
    xs = np.geomspace(20, 600, 8)
    estimates = [_estimate(n, x, n * x**-3) for x in xs]
    fit = scaling_fit(estimates + [_estimate(n, 900.0, 0.0, hits=0), _estimate(n, 800.0, 1e-6, hits=1)])
    assert abs(fit.slope + 3.0) < 1e-9
    assert fit.points_used == 8
    assert any(f.startswith("excluded_zero") for f in fit.flags)
    assert any(f.startswith("excluded_low_hits") for f in fit.flags)

    ns = np.array([1e3, 3e3, 1e4, 3e4])
    by_n = [_estimate(int(m), 4 * m**0.6, m**(1 - 0.6 * 3)) for m in ns]
    assert abs(scaling_fit(by_n, "n_exponent", alpha=0.6).slope + 0.8) < 1e-9

    with pytest.raises(FitError):
        scaling_fit(estimates[:2])
    with pytest.raises(UsageError):
        scaling_fit(by_n, "n_exponent")
    with pytest.raises(DomainError):
        scaling_fit(by_n, "n_exponent", alpha=0.5)


def test_kappa_fit():
    from bounds.deviation import lower_shape
    from chains.errors import UsageError
    from tails.fitting import kappa_fit

    shape = lower_shape(3.0)
    xs = [10.0, 20.0, 40.0]
    exact = [_estimate(1000, x, shape(1000, x)) for x in xs]
    assert kappa_fit(exact, shape) == pytest.approx(1.0)
    doubled = exact[:1] + [_estimate(1000, 20.0, 2 * shape(1000, 20.0))] + exact[2:]
    assert kappa_fit(doubled, shape) == pytest.approx(2.0)
    with pytest.raises(UsageError):
        kappa_fit([], shape)


def test_limit_diagnostics_calibration():
    from tails.fitting import limit_diagnostic

    rng = np.random.default_rng(2024)
    ks = limit_diagnostic(3.0, rng.standard_normal(5000), "ks_normal")
    print(f"  KS distance of normal samples: {ks:.4f}")
    assert ks < 0.03
    hill = limit_diagnostic(1.5, rng.pareto(1.5, 10_000) + 1.0, "hill_index")
    print(f"  Hill index of Pareto(1.5): {hill:.3f}")
    assert abs(hill - 1.5) < 0.2


def test_limit_diagnostic_errors():
    from chains.errors import DegenerateInputError, DomainError
    from tails.fitting import limit_diagnostic

    with pytest.raises(DegenerateInputError):
        limit_diagnostic(3.0, np.ones(1000))
    with pytest.raises(DomainError):
        limit_diagnostic(3.0, np.arange(100.0))


def test_variance_stability():
    from chains.errors import UsageError
    from tails.fitting import variance_stability

    rng = np.random.default_rng(7)
    ratio = variance_stability({10: rng.normal(size=5000), 20: 1.2 * rng.normal(size=5000)})
    assert 1.2 < ratio < 1.7
    with pytest.raises(UsageError):
        variance_stability({10: [1.0, 2.0]})
    with pytest.raises(UsageError):
        variance_stability({10: [1.0, 2.0], 20: [1.0, 3.0]}, scale="mad")


def test_iqr_stability_ignores_one_huge_excursion():
    from tails.fitting import variance_stability

    rng = np.random.default_rng(11)
    clean = rng.normal(size=5000)
    spiked = rng.normal(size=5000)
    spiked[0] = 500.0
    samples = {1_000: clean, 10_000: spiked}
    assert variance_stability(samples) > 20.0
    assert variance_stability(samples, scale="iqr") < 1.3


def test_block_check():
    """Conditional means respect the sup-norm cap and center the block sums."""
    from chains.errors import DomainError, TruncationWarning
    from chains.laws import renewal_law
    from tails.blocks import block_check

    law = renewal_law(2.0, 10_000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        report = block_check(law, 400, 40.0, 300, seed=13)
    print(f"  t={report.t} blocks={report.blocks} max|X|={report.max_abs_X:.3f} cap={report.cap:.3f}")
    assert report.t == 20 and report.blocks == 20
    assert report.cap_holds
    assert report.residual_ok
    assert math.isfinite(report.mean_X_se)
    assert set(report.to_dict()) >= {"cap", "max_abs_X", "residual", "block_params"}

    with pytest.raises(DomainError):
        block_check(law, 400, 1.0, 300, seed=13)


def test_chunking_and_workers(monkeypatch):
    from chains.errors import ConfigError
    from tails.parallel import CHUNK_TRIALS, WORKERS_ENV, chunk_sizes, resolve_workers

    assert chunk_sizes(5000) == [CHUNK_TRIALS, CHUNK_TRIALS, 5000 - 2 * CHUNK_TRIALS]
    assert chunk_sizes(CHUNK_TRIALS) == [CHUNK_TRIALS]
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(2) == 2
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_workers(None)
