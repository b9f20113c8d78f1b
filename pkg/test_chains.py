#!/usr/bin/env python3
"""Tests for the exemplar chains: laws, observables, samplers and RNG streams."""

import math

import numpy as np
import pytest


def test_imports():
    """Test all imports work."""
    print("Testing imports...")
    from chains import (
        RenewalLaw, HarrisParams, Observable, RngStream,
        RenewalChain, HarrisChain, DoublingChain, TableChain, build_chain,
    )
    from mixing import mixing_curve, rate_fit
    from bounds import moddev_bound, young_bound
    from tails import mc_tail, dp_sum_tail, scaling_fit
    print("  All imports successful!")


def test_zeta_closed_forms():
    """zeta matches pi^2/6 and pi^4/90."""
    from chains.laws import zeta

    assert abs(zeta(2.0) - math.pi**2 / 6) < 1e-12
    assert abs(zeta(4.0) - math.pi**4 / 90) < 1e-12
    print(f"  zeta(1.5) = {zeta(1.5):.12f}")
    assert abs(zeta(1.5) - 2.612375348685488) < 1e-10


def test_zeta_rejects_s_le_1():
    from chains.errors import DomainError
    from chains.laws import zeta

    with pytest.raises(DomainError):
        zeta(1.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_kac_consistency(p):
    """E(tau) pi{0} = 1 for the full-size truncation."""
    from chains.laws import renewal_law

    law = renewal_law(p, 10**6)
    print(f"  p={p}: mean_tau={law.mean_tau:.9f} pi0={law.pi0:.9f} gap={law.kac_gap:.2e}")
    assert law.kac_gap < 1e-6
    assert law.tail_tol <= law.tail_tol_bound


def test_renewal_law_masses():
    """Jump pmf plus its tail and pi plus its tail both sum to 1."""
    from chains.laws import renewal_law

    law = renewal_law(3.0, 1000)
    assert law.jump_pmf[0] == 0.0
    assert abs(law.jump_pmf.sum() + law.tail_tol - 1.0) < 1e-12
    assert abs(law.pi_pmf.sum() + law.pi_tail - 1.0) < 1e-10
    assert law.pi_pmf[0] == law.pi_pmf[1] == law.pi0
    assert np.all(np.diff(law.pi_pmf[1:]) <= 0)


def test_truncation_warning():
    """A coarse truncation with a tight mass tolerance warns."""
    from chains.errors import TruncationWarning
    from chains.laws import renewal_law

    with pytest.warns(TruncationWarning):
        renewal_law(1.5, 10, mass_tol=1e-6)


def test_renewal_law_rejects_bad_inputs():
    from chains.errors import DomainError
    from chains.laws import renewal_law

    with pytest.raises(DomainError):
        renewal_law(1.0)
    with pytest.raises(DomainError):
        renewal_law(2.0, 1)


def test_harris_params():
    """a = p - 1 and c = a/(a + gamma)."""
    from chains.errors import DomainError
    from chains.laws import HarrisParams

    params = HarrisParams(p=2.0, gamma=1.0)
    assert params.a == 1.0
    assert params.c_a_gamma == 0.5
    assert params.mean_tau == 2.0
    assert HarrisParams(p=3.0, gamma=2.0).c_a_gamma == pytest.approx(0.5)
    with pytest.raises(DomainError):
        HarrisParams(p=2.0, gamma=0.0)


def test_observables_centered():
    """Each canonical observable has pi-mean 0."""
    from chains.laws import renewal_law
    from chains.observables import identity_observable, observable_value, renewal_indicator, table_observable

    law = renewal_law(3.0, 5000)
    obs = renewal_indicator(law)
    values = obs.values(np.arange(law.truncation_N + 1))
    assert abs(values @ law.pi_pmf) < 1e-6
    assert observable_value(obs, 0) == pytest.approx(law.pi0 - 1.0)
    assert observable_value(obs, 7) == pytest.approx(law.pi0)

    ident = identity_observable()
    assert observable_value(ident, 0.75) == 0.25

    table = table_observable([0.0, 1.0, 3.0], [0.5, 0.25, 0.25])
    assert table.centering == pytest.approx(1.0)
    assert table.sup_norm == pytest.approx(2.0)


def test_observable_oscillation():
    """sup f - inf f: 1 for the canonical observables, the table range otherwise."""
    from chains.kernels import doubling_chain, harris_chain, renewal_chain
    from chains.observables import table_observable

    for chain in (renewal_chain(3.0, 100), harris_chain(2.0, 0.5), doubling_chain()):
        assert chain.default_observable().oscillation == 1.0
    assert table_observable([0.0, 1.0, 3.0], [0.5, 0.25, 0.25]).oscillation == 3.0


def test_table_observable_lookup_error():
    from chains.errors import ObservableLookupError
    from chains.observables import table_observable

    obs = table_observable([0.0, 1.0], [0.5, 0.5])
    with pytest.raises(ObservableLookupError):
        obs.values(np.array([0, 2]))


def test_rng_streams_reproducible():
    """Equal (seed, stream) pairs give equal draws; distinct streams differ."""
    from chains.rng import MAX_SEED, RngStream, make_generator, open_uniform

    a = RngStream(42, 3).generator().random(5)
    b = make_generator(42, 3).random(5)
    c = RngStream(42, 4).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)

    u = open_uniform(RngStream(MAX_SEED).generator(), 100_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert RngStream.from_dict(RngStream(7, 2).to_dict()) == RngStream(7, 2)


def test_rng_rejects_bad_seed():
    from chains.errors import DomainError
    from chains.rng import RngStream

    with pytest.raises(DomainError):
        RngStream(-1)
    with pytest.raises(DomainError):
        RngStream(2**64)


def test_renewal_step_semantics():
    """Positive states descend by one; state 0 jumps to n >= 1."""
    from chains.kernels import renewal_chain, renewal_step

    chain = renewal_chain(2.0, 1000)
    rng = np.random.default_rng(0)
    assert renewal_step(chain.law, 5, rng) == 4
    jumps = [renewal_step(chain.law, 0, rng) for _ in range(200)]
    assert min(jumps) >= 1 and max(jumps) <= 1000

    states = chain.step_many(np.array([0, 1, 2, 0]), rng)
    assert states[1] == 0 and states[2] == 1
    assert states[0] >= 1 and states[3] >= 1


def test_harris_chain_holds_or_refreshes():
    from chains.kernels import harris_chain, harris_step

    chain = harris_chain(2.0)
    rng = np.random.default_rng(1)
    start = np.full(10_000, 0.25)
    nxt = chain.step_many(start, rng)
    moved = np.mean(nxt != 0.25)
    print(f"  refresh frequency at x=0.25: {moved:.4f}")
    assert abs(moved - 0.25) < 0.02
    assert 0.0 <= harris_step(chain.params, 0.5, rng) <= 1.0


def test_harris_stationary_mean():
    """E_pi(Y^gamma) = a/(a + gamma) from the stationary sampler."""
    from chains.kernels import harris_chain

    chain = harris_chain(2.0, 1.0)
    sample = chain.stationary_sample(np.random.default_rng(2), 200_000)
    se = sample.std() / math.sqrt(sample.size)
    assert abs(sample.mean() - 0.5) < 4 * se


def test_doubling_step():
    from chains.errors import DomainError
    from chains.kernels import doubling_step

    rng = np.random.default_rng(3)
    y = doubling_step(0.5, rng)
    assert y in (0.25, 0.75)
    with pytest.raises(DomainError):
        doubling_step(1.0, rng)


def test_excursion_sources():
    """Renewal tau = J + 1; Harris excursion mean is p/(p - 1)."""
    from chains.excursions import HarrisExcursions, RenewalExcursions, truncated_tau_pmf
    from chains.laws import HarrisParams, renewal_law

    law = renewal_law(3.0, 1000)
    marks, lengths = RenewalExcursions(law).sample(np.random.default_rng(4), 1000)
    assert np.array_equal(lengths, marks + 1)

    lengths = HarrisExcursions(HarrisParams(3.0)).sample_lengths(np.random.default_rng(5), 200_000)
    se = lengths.std() / math.sqrt(lengths.size)
    assert abs(lengths.mean() - 1.5) < 4 * se

    pmf = truncated_tau_pmf(law, 50)
    assert pmf[0] == 0.0
    assert abs(pmf.sum() - 1.0) < 1e-12


def test_table_chain():
    from chains.errors import DomainError
    from chains.kernels import table_chain

    chain = table_chain([[0.5, 0.5], [0.2, 0.8]], pi=[2 / 7, 5 / 7])
    rng = np.random.default_rng(6)
    states = chain.step_many(np.zeros(1000, dtype=np.int64), rng)
    assert set(np.unique(states)) <= {0, 1}
    with pytest.raises(DomainError):
        table_chain([[0.5, 0.4], [0.2, 0.8]])


def test_build_chain():
    from chains.errors import DomainError
    from chains.kernels import build_chain

    assert build_chain("renewal", 3.0, truncation_N=100).name == "renewal"
    tower = build_chain("tower", 3.0, truncation_N=100)
    assert tower.name == "tower" and tower.provenance
    assert build_chain("harris", 2.0).params.gamma == 1.0
    assert build_chain("doubling").name == "doubling"
    with pytest.raises(DomainError):
        build_chain("renewal")
    with pytest.raises(DomainError):
        build_chain("ladder", 2.0)


def _lumped_counts(values, top):
    """Counts of 0..top-1 plus one bin for values >= top."""
    values = np.asarray(values, dtype=np.int64)
    counts = np.bincount(np.minimum(values, top), minlength=top + 1)
    return counts[:top + 1]


def test_renewal_one_step_keeps_stationary_law():
    """Chi-square of one step from pi against pi on {0..11, >= 12}."""
    from scipy import stats
    from chains.kernels import renewal_chain

    chain = renewal_chain(3.0, 1000)
    rng = np.random.default_rng(20)
    states = chain.step_many(chain.stationary_sample(rng, 100_000), rng)
    pi = chain.law.pi_pmf / chain.law.pi_pmf.sum()
    expected = np.append(pi[:12], pi[12:].sum()) * states.size
    result = stats.chisquare(_lumped_counts(states, 12), expected)
    print(f"  renewal stationarity chi-square p={result.pvalue:.3f}")
    assert result.pvalue > 1e-3


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_harris_one_step_keeps_stationary_law(p):
    """KS of one step from pi against the stationary CDF x^a."""
    from scipy import stats
    from chains.kernels import harris_chain

    chain = harris_chain(p)
    rng = np.random.default_rng(21)
    states = chain.step_many(chain.stationary_sample(rng, 50_000), rng)
    a = chain.params.a
    assert stats.kstest(states, lambda x: np.clip(x, 0.0, 1.0) ** a).pvalue > 1e-3


def test_doubling_one_step_keeps_lebesgue():
    from scipy import stats
    from chains.kernels import doubling_chain

    chain = doubling_chain()
    rng = np.random.default_rng(22)
    states = chain.step_many(chain.stationary_sample(rng, 50_000), rng)
    assert stats.kstest(states, "uniform").pvalue > 1e-3


def test_table_one_step_keeps_stationary_law():
    from scipy import stats
    from chains.kernels import table_chain

    pi = np.array([2 / 7, 5 / 7])
    chain = table_chain([[0.5, 0.5], [0.2, 0.8]], pi=pi)
    rng = np.random.default_rng(23)
    states = chain.step_many(chain.stationary_sample(rng, 50_000), rng)
    counts = np.bincount(states.astype(np.int64), minlength=2)
    assert stats.chisquare(counts, pi * states.size).pvalue > 1e-3


def test_doubling_forgets_start_after_60_steps():
    from scipy import stats
    from chains.kernels import doubling_chain

    chain = doubling_chain()
    rng = np.random.default_rng(24)
    states = np.full(20_000, 0.3)
    for _ in range(60):
        states = chain.step_many(states, rng)
    assert stats.kstest(states, "uniform").pvalue > 1e-3


def test_harris_refresh_law_is_nu():
    """From x = 1 the chain always refreshes; nu has CDF u^(a+1) = u^2 at p = 2."""
    from scipy import stats
    from chains.kernels import harris_chain, harris_step

    params = harris_chain(2.0).params
    rng = np.random.default_rng(25)
    draws = np.array([harris_step(params, 1.0, rng) for _ in range(5000)])
    assert stats.kstest(draws, lambda u: np.clip(u, 0.0, 1.0) ** 2).pvalue > 1e-3


def test_harris_holding_time_matches_excursion_law():
    """Steps until the first refresh from a nu-start, against harris_excursion lengths."""
    from scipy import stats
    from chains.excursions import HarrisExcursions, harris_excursion
    from chains.kernels import harris_chain

    chain = harris_chain(2.0)
    size, atoms = 20_000, 30
    rng = np.random.default_rng(26)
    states = HarrisExcursions(chain.params).sample(rng, size)[0]
    holds = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    for t in range(1, 5 * atoms):
        nxt = chain.step_many(states[active], rng)
        moved = nxt != states[active]
        idx = np.flatnonzero(active)
        holds[idx[moved]] = t
        active[idx[moved]] = False
        if not active.any():
            break
    holds[active] = 5 * atoms

    direct = np.array([harris_excursion(chain.params, rng).length for _ in range(size)])
    table = np.vstack([_lumped_counts(holds, atoms + 1)[1:], _lumped_counts(direct, atoms + 1)[1:]])
    table = table[:, table.sum(axis=0) > 0]
    _, pvalue, _, _ = stats.chi2_contingency(table)
    print(f"  holding-time vs excursion chi-square p={pvalue:.3f}")
    assert pvalue > 1e-3


def test_renewal_tau_survival_matches_sampled_lengths():
    """Empirical P(tau > n) within 4 Wilson half-widths of the exact tail, n = 1..30."""
    from chains.excursions import RenewalExcursions
    from chains.laws import renewal_law
    from tails.estimate import wilson_interval

    law = renewal_law(2.0, 10_000)
    lengths = RenewalExcursions(law).sample_lengths(np.random.default_rng(27), 200_000)
    for n in range(1, 31):
        hits = int(np.sum(lengths > n))
        low, high = wilson_interval(hits, lengths.size)
        exact = law.tau_survival(n)
        assert abs(hits / lengths.size - exact) <= 4.0 * (high - low) / 2.0 + 1e-12, n


def test_renewal_jump_from_zero_is_multinomial():
    """renewal_step from 0 against the jump pmf on {1..9, >= 10}."""
    from scipy import stats
    from chains.kernels import renewal_step
    from chains.laws import renewal_law

    law = renewal_law(3.0, 1000)
    rng = np.random.default_rng(28)
    jumps = np.array([renewal_step(law, 0, rng) for _ in range(20_000)])
    q = law.jump_pmf[1:] / law.jump_pmf[1:].sum()
    expected = np.append(q[:9], q[9:].sum()) * jumps.size
    observed = _lumped_counts(jumps, 10)[1:]
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_step_functions_accept_streams():
    """A stream, a seed-built generator and the stream's own generator agree."""
    from chains.kernels import doubling_step, harris_chain, harris_step, renewal_step
    from chains.laws import renewal_law
    from chains.rng import RngStream, make_generator

    law = renewal_law(3.0, 1000)
    stream = RngStream(9, 1)
    assert renewal_step(law, 0, stream) == renewal_step(law, 0, make_generator(9, 1))
    assert renewal_step(law, 4, stream) == 3
    params = harris_chain(2.0).params
    assert harris_step(params, 0.5, stream) == harris_step(params, 0.5, stream.generator())
    assert doubling_step(0.5, stream) in (0.25, 0.75)


def test_single_jump_kappa():
    from chains.laws import renewal_law

    law = renewal_law(3.0, 10_000)
    kappa = law.single_jump_kappa
    print(f"  p=3 single-jump kappa {kappa:.5f}")
    assert 0.0150 < kappa < 0.0160
    assert kappa == pytest.approx(law.pi0**4 / (3.0 * law.zeta_p1))


def main():
    print("=" * 50)
    print("Chains Test Suite")
    print("=" * 50)
    print()

    test_imports()
    print()

    test_zeta_closed_forms()
    print()

    for p in (1.5, 2.0, 3.0, 4.0):
        test_kac_consistency(p)
    print()

    test_renewal_law_masses()
    test_harris_params()
    test_observables_centered()
    test_rng_streams_reproducible()
    test_renewal_step_semantics()
    test_harris_chain_holds_or_refreshes()
    test_excursion_sources()
    test_renewal_tau_survival_matches_sampled_lengths()
    test_step_functions_accept_streams()
    print()

    print("=" * 50)
    print("All tests passed!")
    print("=" * 50)


if __name__ == "__main__":
    main()
