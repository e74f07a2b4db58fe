import warnings

import numpy as np
import pytest

from funkmean import (
    BasisSpec,
    DiagnosticCurve,
    FunctionalDataset,
    GroupedScores,
    ReorderProfile,
    SpikeRule,
    detect_spikes,
    emit_diagnostic_artifacts,
    multi_basis_diagnostic,
    reorder_diagnostic,
    split_dataset,
)
from funkmean.diagnostics import (
    IOFailure,
    VolatilityWarning,
    default_p_max,
    noncentrality_profile,
    single_function_profile,
)
from funkmean.errors import EmptyInput, InvalidInput, SingularCovariance
from funkmean.flrt import moments, noncentrality_core
from funkmean.simulate import simulate_dataset, table3_config

from helpers import gaussian_scores, random_spd


@pytest.fixture(scope="module")
def table3_data():
    return simulate_dataset(table3_config(), c=0.4, seed=11)


def one_dim_noncentrality(a, b):
    """Two-group p=1 value d^2 n1 / (n1 s2 + n2 s1) with divisor-n variances."""
    n1, n2 = len(a), len(b)
    d = a.mean() - b.mean()
    return d**2 * n1 / (n1 * b.var() + n2 * a.var())


def test_identical_groups_give_zero_curves(rng):
    t = np.linspace(0, 1, 80)
    arr = np.cumsum(rng.standard_normal((40, 80)), axis=1) / 9
    data = FunctionalDataset.from_arrays(t, [arr, arr[::-1]])
    for cur in multi_basis_diagnostic(data, [BasisSpec("fourier", 1), BasisSpec("haar", 1)], 6):
        assert np.all(np.abs(cur.values) <= 1e-10)
    prof = reorder_diagnostic(data, BasisSpec("fourier", 1), 20)
    assert np.all(prof.values <= 1e-10) and prof.spikes == []


def test_table3_jumps(table3_data):
    haar, fourier = multi_basis_diagnostic(table3_data, [BasisSpec("haar", 1, haar_start_level=1), BasisSpec("fourier", 1)], 12)
    assert haar.basis_label == "haar1" and fourier.basis_label == "fourier"
    assert haar.at(4) >= 10 * haar.at(3)
    assert fourier.at(11) >= 10 * fourier.at(10)


def test_table3_reorder_spike_at_11(table3_data):
    prof = reorder_diagnostic(table3_data, BasisSpec("fourier", 1), 100)
    assert prof.argmax == 11 and prof.spikes[0] == 11


def test_equal_mean_reorder_near_zero():
    data = simulate_dataset(table3_config(), c=0.0, seed=12)
    for spec in (BasisSpec("fourier", 1), BasisSpec("haar", 1, haar_start_level=1)):
        prof = reorder_diagnostic(data, spec, 100)
        assert prof.values.max() < 0.05 and prof.spikes == []


def test_population_values_nondecreasing_in_p(rng):
    p, k = 8, 3
    means = rng.standard_normal((k, p))
    covs = np.stack([random_spd(rng, p) for _ in range(k)])
    sizes = [50, 80, 65]
    vals = [noncentrality_core(means[:, :q], covs[:, :q, :q], sizes)[0] for q in range(1, p + 1)]
    assert np.all(np.diff(vals) >= -1e-10)


def test_shift_along_one_direction_peaks_there(rng):
    p = 6
    means = np.zeros((2, p))
    means[1, 2] = 0.8
    s = gaussian_scores(rng, [60, 45], p, means=means)
    vals = single_function_profile(s)
    assert int(np.argmax(vals)) == 2 and vals[2] > np.delete(vals, 2).max()
    oracle = [one_dim_noncentrality(s.matrices[0][:, l], s.matrices[1][:, l]) for l in range(p)]
    np.testing.assert_allclose(vals, oracle, rtol=1e-10)


def test_reorder_permutation_equivariance(rng):
    s = gaussian_scores(rng, [30, 40], 9, means=rng.standard_normal((2, 9)) * 0.2)
    perm = rng.permutation(9)
    assert np.array_equal(single_function_profile(s.columns(perm)), single_function_profile(s)[perm])


def test_constant_function_shift_invariance(rng):
    t = np.linspace(0, 1, 64)
    a = np.cumsum(rng.standard_normal((30, 64)), axis=1) / 8
    b = np.cumsum(rng.standard_normal((25, 64)), axis=1) / 8 + np.sin(2 * np.pi * t)
    data = FunctionalDataset.from_arrays(t, [a, b])
    moved = FunctionalDataset.from_arrays(t, [a + 3.7, b + 3.7])
    specs = [BasisSpec("fourier", 1), BasisSpec("haar", 1), BasisSpec("spline", 1)]
    for c0, c1 in zip(multi_basis_diagnostic(data, specs, 5), multi_basis_diagnostic(moved, specs, 5)):
        np.testing.assert_allclose(c0.values, c1.values, rtol=1e-8, atol=1e-12)
    r0 = reorder_diagnostic(data, BasisSpec("fourier", 1), 15)
    r1 = reorder_diagnostic(moved, BasisSpec("fourier", 1), 15)
    np.testing.assert_allclose(r0.values, r1.values, rtol=1e-8, atol=1e-12)


def test_consistency_with_population_value():
    rng = np.random.default_rng(5)
    p = 3
    mu = np.array([[0.0, 0.0, 0.0], [0.3, -0.2, 0.1]])
    covs = np.stack([random_spd(rng, p), random_spd(rng, p)])
    L = np.linalg.cholesky(covs)

    def deviation(n):
        z = rng.standard_normal((200, 2, n, p))
        y = np.einsum("kij,rknj->rkni", L, z) + mu[None, :, None, :]
        m, c = moments(y)
        est, ok = noncentrality_core(m, c, [n, n])
        truth, _ = noncentrality_core(mu, covs, [n, n])
        return np.mean(np.abs(est - truth))

    assert deviation(2000) < 0.5 * deviation(200)


def test_volatility_warning_and_default_p_max(rng):
    t = np.linspace(0, 1, 50)
    data = FunctionalDataset.from_arrays(t, [rng.standard_normal((20, 50)), rng.standard_normal((30, 50))])
    assert default_p_max(data) == 6
    with pytest.warns(VolatilityWarning):
        multi_basis_diagnostic(data, [BasisSpec("fourier", 1)], 6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        multi_basis_diagnostic(data, [BasisSpec("fourier", 1)], 4)


def test_singular_covariance_names_basis(rng):
    t = np.linspace(0, 1, 50)
    data = FunctionalDataset.from_arrays(t, [rng.standard_normal((5, 50)), rng.standard_normal((30, 50))])
    with pytest.raises(SingularCovariance, match="fourier.*p=5"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            multi_basis_diagnostic(data, [BasisSpec("fourier", 1)], 8)


def test_nested_profile_matches_separate_fits(rng):
    s = gaussian_scores(rng, [40, 35], 5, means=rng.standard_normal((2, 5)) * 0.3)
    prof = noncentrality_profile(s)
    from funkmean import noncentrality_estimate

    for q in range(1, 6):
        assert prof[q - 1] == pytest.approx(noncentrality_estimate(s.columns(list(range(q)))), rel=1e-10)


# --- spike detection ------------------------------------------------------


def test_spike_examples():
    assert detect_spikes([3.0] * 40) == []
    assert detect_spikes([0.0] * 99 + [10.0]) == [100]
    assert detect_spikes([]) == []


def test_spikes_satisfy_rule_and_cap(rng):
    v = np.abs(rng.standard_normal(50)) * 1e-3
    v[[4, 17, 30]] = [5.0, 9.0, 7.0]
    assert detect_spikes(v) == [18, 31, 5]
    assert detect_spikes(v, SpikeRule(max_count=2)) == [18, 31]
    for rule in (SpikeRule(), SpikeRule(scale="linear")):
        u = np.log1p(v / rule.floor) if rule.scale == "log" else v
        med = np.median(u)
        mad = np.median(np.abs(u - med))
        for l in detect_spikes(v, rule):
            assert u[l - 1] > med + rule.c * mad and v[l - 1] > rule.floor


def test_floor_suppresses_tiny_values():
    assert detect_spikes([0.0] * 99 + [5e-4]) == []


@pytest.mark.parametrize(
    "draw",
    [
        lambda r: r.exponential(size=100),
        lambda r: r.chisquare(1, size=100) / 300,
        lambda r: r.uniform(size=100),
    ],
    ids=["exponential", "scaled-chisq1", "uniform"],
)
def test_false_spike_rate(draw):
    r = np.random.default_rng(8)
    rate = np.mean([len(detect_spikes(draw(r))) > 0 for _ in range(1000)])
    assert rate <= 0.05


def test_spike_rule_validation():
    with pytest.raises(InvalidInput):
        SpikeRule(scale="sqrt")
    with pytest.raises(InvalidInput):
        detect_spikes([1.0, np.nan])


# --- artifacts ------------------------------------------------------------


def test_emit_empty_raises(tmp_path):
    with pytest.raises(EmptyInput):
        emit_diagnostic_artifacts([], tmp_path / "x")


def test_emit_single_curve(tmp_path):
    cur = DiagnosticCurve("fourier", np.array([0.1, 0.2, 0.3, 0.4, 0.5]))
    csv_path, svg_path = emit_diagnostic_artifacts(cur, tmp_path / "diag.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "index,value,basis" and len(lines) == 6
    assert lines[1] == "1,0.1,fourier"
    assert svg_path.read_text().startswith("<svg")


def test_emit_two_series_deterministic(tmp_path):
    curves = [DiagnosticCurve("fourier", np.arange(4.0)), DiagnosticCurve("haar", np.arange(4.0) ** 2)]
    _, a = emit_diagnostic_artifacts(curves, tmp_path / "a")
    _, b = emit_diagnostic_artifacts(curves, tmp_path / "b")
    svg = a.read_text()
    assert svg == b.read_text()
    assert svg.count("<polyline") == 2 and ">fourier<" in svg and ">haar<" in svg


def test_emit_profile(tmp_path):
    prof = ReorderProfile("fourier", np.array([0.0, 3.0, 0.1]), [2])
    csv_path, _ = emit_diagnostic_artifacts(prof, tmp_path / "p")
    assert csv_path.read_text().splitlines()[2] == "2,3.0,fourier"


def test_emit_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IOFailure):
        emit_diagnostic_artifacts(DiagnosticCurve("f", np.ones(2)), blocker / "sub" / "x")


# --- splitting ----------------------------------------------------------------


def test_split_dataset(rng):
    t = np.linspace(0, 1, 10)
    arr = [rng.standard_normal((11, 10)), rng.standard_normal((6, 10))]
    data = FunctionalDataset.from_arrays(t, arr)
    train, test = split_dataset(data, 0.5, seed=3)
    assert [len(g) for g in train.groups] == [6, 3] and [len(g) for g in test.groups] == [5, 3]
    for j in range(2):
        ids = {id(c) for c in train.groups[j]} | {id(c) for c in test.groups[j]}
        assert len(ids) == len(data.groups[j])
    again, _ = split_dataset(data, 0.5, seed=3)
    assert [id(c) for c in again.groups[0]] == [id(c) for c in train.groups[0]]
    with pytest.raises(InvalidInput):
        split_dataset(data, 1.0)
