import numpy as np
import pytest

from regime_forecast.data import (
    SeriesBundle, SynthSpec, destandardize, differences, integrate, load_flow_csv, split, standardize,
    synthesize, window, write_flow_csv,
)
from regime_forecast.errors import DataError
from regime_forecast.markov import GmmEmission, HsmmModel, SojournDensity

T0 = np.datetime64("2024-03-01T00:00:00")
STEP = np.timedelta64(5, "m")


def stamps(n, start=T0):
    return start + STEP * np.arange(n)


def write(tmp_path, text, name="flow.csv"):
    path = tmp_path / name
    path.write_bytes(text.encode())
    return path


def bundle_of(delta, start=100.0):
    flow = integrate(start, delta)
    return SeriesBundle(stamps(flow.size), flow)


# --- loading ---------------------------------------------------------------


def test_three_row_file(tmp_path):
    path = write(tmp_path, "timestamp,flow\n2024-03-01T00:00:00,10\n2024-03-01T00:05:00,12\n2024-03-01T00:10:00,11\n")
    b = load_flow_csv(path)
    np.testing.assert_array_equal(b.delta, [2.0, -1.0])
    assert b.report["rows_read"] == 3 and b.report["points_interpolated"] == 0


def test_crlf_bom_and_offsets(tmp_path):
    text = "﻿timestamp,flow\r\n2024-03-01T00:00:00+02:00,1\r\n2024-03-01T00:05:00+02:00,4\r\n"
    b = load_flow_csv(write(tmp_path, text))
    assert b.timestamps[0] == T0
    np.testing.assert_array_equal(b.delta, [3.0])


def test_interior_gap_interpolated_and_reported(tmp_path):
    text = "timestamp,flow\n2024-03-01T00:00:00,10\n2024-03-01T00:05:00,12\n2024-03-01T00:15:00,20\n"
    b = load_flow_csv(write(tmp_path, text))
    np.testing.assert_array_equal(b.flow, [10.0, 12.0, 16.0, 20.0])
    assert b.report["points_interpolated"] == 1
    assert b.report["interpolated_timestamps"] == ["2024-03-01T00:10:00"]


def test_long_gap_keeps_longest_segment(tmp_path):
    rows = [f"{t},{i}" for i, t in enumerate(stamps(3))]
    later = stamps(6, T0 + np.timedelta64(2, "h"))
    rows += [f"{t},{i}" for i, t in enumerate(later)]
    b = load_flow_csv(write(tmp_path, "timestamp,flow\n" + "\n".join(rows) + "\n"))
    assert b.timestamps[0] == later[0] and b.flow.size == 6
    assert b.report["segments_dropped"] == 1 and b.report["rows_dropped"] == 3


def test_duplicates_keep_first(tmp_path):
    text = "timestamp,flow\n2024-03-01T00:00:00,1\n2024-03-01T00:00:00,9\n2024-03-01T00:05:00,2\n"
    b = load_flow_csv(write(tmp_path, text))
    np.testing.assert_array_equal(b.flow, [1.0, 2.0])
    assert b.report["duplicates_dropped"] == 1


@pytest.mark.parametrize("text, match", [
    ("", "empty"),
    ("time,flow\n2024-03-01T00:00:00,1\n", "header"),
    ("timestamp,flow\n2024-03-01T00:00:00,1\n2024-03-01T00:05:00,abc\n", "line 3"),
    ("timestamp,flow\n2024-03-01T00:00:00,1\nnot-a-time,2\n", "line 3"),
    ("timestamp,flow\n2024-03-01T00:00:00,1,2\n", "line 2"),
    ("timestamp,flow\n2024-03-01T00:05:00,1\n2024-03-01T00:00:00,2\n", "monotone"),
    ("timestamp,flow\n2024-03-01T00:00:00,1\n2024-03-01T00:07:00,2\n", "5-minute"),
    ("timestamp,flow\n2024-03-01T00:00:00,nan\n", "finite"),
])
def test_malformed_files(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_flow_csv(write(tmp_path, text))


def test_csv_round_trip(tmp_path):
    flow = np.array([3.0, 7.5, 1.25, 0.1])
    write_flow_csv(tmp_path / "out.csv", stamps(4), flow)
    b = load_flow_csv(tmp_path / "out.csv")
    np.testing.assert_array_equal(b.flow, flow)
    np.testing.assert_array_equal(b.timestamps, stamps(4))


# --- transforms ------------------------------------------------------------


def test_differencing_and_integration_are_inverse(rng):
    flow = rng.integers(0, 400, size=500).astype(float)
    d = differences(flow)
    assert d.size == flow.size - 1
    np.testing.assert_array_equal(integrate(flow[0], d), flow)


def test_standardize_symmetric_case():
    b = standardize(split(bundle_of(np.tile([-1.0, 1.0], 50))))
    assert b.mean == 0.0 and b.std == 1.0
    np.testing.assert_array_equal(b.standardized, b.delta)


def test_standardize_uses_train_only(rng):
    delta = rng.normal(size=200)
    b = split(bundle_of(delta))
    shifted = split(bundle_of(np.concatenate([delta[:120], delta[120:] + 50.0])))
    assert standardize(b).mean == standardize(shifted).mean
    z = standardize(b).part("train")
    assert abs(z.mean()) < 1e-9 and abs(z.var() - 1.0) < 1e-9


def test_standardize_errors():
    with pytest.raises(DataError, match="zero variance"):
        standardize(split(bundle_of(np.ones(40))))
    with pytest.raises(DataError):
        standardize(bundle_of(np.arange(40.0)))


def test_destandardize_round_trip(rng):
    b = standardize(split(bundle_of(rng.normal(5, 3, size=300))))
    np.testing.assert_allclose(destandardize(b.standardized, b.mean, b.std), b.delta, atol=1e-12)


@pytest.mark.parametrize("n, bounds, sizes", [(100, (60, 75), (60, 15, 25)), (101, (60, 75), (60, 15, 26))])
def test_split_boundaries(n, bounds, sizes):
    b = split(bundle_of(np.arange(n, dtype=float) % 7))
    assert b.splits == bounds
    assert tuple(b.part(k, standardized=False).size for k in ("train", "val", "test")) == sizes
    ts = b.delta_timestamps
    sl = b.split_slices()
    assert ts[sl["train"]].max() < ts[sl["val"]].min() and ts[sl["val"]].max() < ts[sl["test"]].min()


def test_split_errors():
    with pytest.raises(DataError, match="too short"):
        split(bundle_of(np.arange(10.0)))
    with pytest.raises(DataError):
        split(bundle_of(np.arange(50.0)), fractions=(0.5, 0.5, 0.5))


def test_window_pairs():
    inputs, targets, idx = window([1.0, 2.0, 3.0, 4.0, 5.0], 2)
    assert inputs.shape == (3, 2)
    np.testing.assert_array_equal(inputs[0], [1.0, 2.0])
    np.testing.assert_array_equal(targets, [3.0, 4.0, 5.0])
    assert targets[-1] == 5.0 and list(idx) == [2, 3, 4]
    with pytest.raises(DataError):
        window([1.0, 2.0], 2)
    with pytest.raises(DataError):
        window([1.0, 2.0], 0)


def test_bundle_invariants():
    with pytest.raises(DataError):
        SeriesBundle(stamps(1), [1.0])
    with pytest.raises(DataError):
        SeriesBundle(stamps(3), [1.0, 2.0])
    b = bundle_of(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        b.flow[0] = 5.0


# --- synthetic generation ----------------------------------------------------


def single_state(mu=0.5, var=4.0):
    return HsmmModel([[1.0]], [1.0], GmmEmission([[1.0]], [[mu]], [[var]]))


def test_single_state_is_iid_gaussian():
    r = synthesize(SynthSpec(single_state(), 50_000, seed=3))
    assert set(r.labels) == {0}
    assert r.observations.mean() == pytest.approx(0.5, abs=0.05)
    assert r.observations.std() == pytest.approx(2.0, abs=0.05)
    np.testing.assert_allclose(r.bundle.delta, r.observations, atol=1e-9)


def test_semi_occupancy_matches_stationary_distribution():
    soj = SojournDensity("gamma", [[2.0, 3.0], [1.5, 1.0], [4.0, 2.0]], 80)
    A = np.array([[0.0, 0.7, 0.3], [0.4, 0.0, 0.6], [0.5, 0.5, 0.0]])
    em = GmmEmission([[1.0]] * 3, [[0.0]] * 3, [[1.0]] * 3)
    model = HsmmModel(A, [1 / 3] * 3, em, soj, "semi")
    r = synthesize(SynthSpec(model, 100_000, seed=5))
    # stationary law of the jump chain weighted by mean sojourn length
    w, v = np.linalg.eig(A.T)
    nu = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    nu /= nu.sum()
    u = np.arange(1, 81)
    means = soj.pmf_table @ u
    expected = nu * means / (nu * means).sum()
    occupancy = np.bincount(r.labels, minlength=3) / r.labels.size
    np.testing.assert_allclose(occupancy, expected, atol=0.02)


def test_geometric_sojourn_histogram():
    A = np.array([[0.8, 0.2], [0.2, 0.8]])
    em = GmmEmission([[1.0]] * 2, [[-1.0], [1.0]], [[1.0]] * 2)
    r = synthesize(SynthSpec(HsmmModel(A, [0.5, 0.5], em), 100_000, seed=9))
    change = np.flatnonzero(np.diff(r.labels)) + 1
    runs = np.diff(change)  # complete visits only
    runs = runs[r.labels[change[:-1]] == 0]
    U = runs.max()
    hist = np.bincount(runs, minlength=U + 1)[1:] / runs.size
    d = 0.2 * 0.8 ** np.arange(U)
    assert 0.5 * np.abs(hist - d).sum() < 0.02


def test_synthesis_is_reproducible():
    A = np.array([[0.9, 0.1], [0.2, 0.8]])
    em = GmmEmission([[0.5, 0.5], [1.0, 0.0]], [[-1.0, 1.0], [2.0, 0.0]], [[1.0, 0.5], [0.3, 1.0]])
    spec = SynthSpec(HsmmModel(A, [0.5, 0.5], em), 2000, seed=4, ar_coefficients=[[0.3], [-0.2]])
    a, b = synthesize(spec), synthesize(spec)
    assert a.bundle.flow.tobytes() == b.bundle.flow.tobytes()
    np.testing.assert_array_equal(a.labels, b.labels)
    other = synthesize(SynthSpec(spec.model, 2000, seed=5, ar_coefficients=[[0.3], [-0.2]]))
    assert other.bundle.flow.tobytes() != a.bundle.flow.tobytes()


def test_flow_level_mode_counts():
    spec = SynthSpec(single_state(0.0, 0.25), 3000, seed=1, flow_level=True, diurnal_amplitude=0.5)
    r = synthesize(spec)
    f = r.bundle.flow
    assert f.size == 3001 and np.all(f >= 0) and np.all(f == np.round(f))
    assert r.labels.size == len(r.bundle)


def test_synth_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(single_state(), 0)
    with pytest.raises(ValueError):
        SynthSpec(single_state(), 10, ar_coefficients=[[0.1], [0.2]])
