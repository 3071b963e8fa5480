"""Gas-attenuation table: loading, lookup, correction round trips."""

import numpy as np
import pytest

from pathfuse.atmosphere import (
    GasAttenuationTable,
    load_default_table,
    reapply_gas_loss,
    remove_gas_loss,
    restore_gas_loss,
)
from pathfuse.errors import ContractError, DataError, GasRangeError
from pathfuse.models import CoefficientSet, FittedModel, PathLossSample


@pytest.fixture(scope="module")
def table():
    return load_default_table()


def test_bundled_table_spans_the_working_band(table):
    assert table.freqs_ghz[0] <= 1.0
    assert table.freqs_ghz[-1] >= 100.0
    assert np.all(np.diff(table.freqs_ghz) > 0)
    assert np.all(table.atten_db_per_km > 0)


def test_oxygen_line_dominates_thirty_ghz(table):
    assert table.specific_attenuation(60.0) / table.specific_attenuation(30.0) > 10.0


def test_resonance_peaks_sit_where_physics_puts_them(table):
    f = np.arange(50.0, 70.0, 0.1)
    peak = f[np.argmax(table.specific_attenuation(f))]
    assert 58.0 <= peak <= 62.0
    f = np.arange(18.0, 28.0, 0.1)
    peak = f[np.argmax(table.specific_attenuation(f))]
    assert 21.5 <= peak <= 23.0


def test_lookup_interpolates_linearly_in_log_attenuation(table):
    i = int(np.searchsorted(table.freqs_ghz, 40.0))
    f0, f1 = table.freqs_ghz[i], table.freqs_ghz[i + 1]
    a0, a1 = table.atten_db_per_km[i], table.atten_db_per_km[i + 1]
    mid = (f0 + f1) / 2.0
    expect = 10.0 ** ((np.log10(a0) + np.log10(a1)) / 2.0)
    assert table.specific_attenuation(mid) == pytest.approx(expect, rel=1e-12)


def test_gas_loss_scales_linearly_with_distance(table):
    one_km = table.gas_loss(1000.0, 60.0)
    assert table.gas_loss(2000.0, 60.0) == pytest.approx(2.0 * one_km, rel=1e-12)
    assert 10.0 < one_km < 20.0  # the 60 GHz oxygen peak, roughly 15 dB/km
    assert table.gas_loss(0.0, 60.0) == 0.0


def test_out_of_range_frequency_raises(table):
    with pytest.raises(GasRangeError):
        table.specific_attenuation(0.5)
    with pytest.raises(GasRangeError):
        table.specific_attenuation(500.0)


def _samples(freqs):
    return [
        PathLossSample(distance=100.0 * (i + 1), frequency=f,
                       path_loss=100.0 + i, source_id="s")
        for i, f in enumerate(freqs)
    ]


def test_remove_then_reapply_is_identity(table):
    samples = _samples([2.0, 28.0, 60.0, 73.5])
    back = reapply_gas_loss(table, remove_gas_loss(table, samples))
    for s0, s1 in zip(samples, back):
        assert s1.path_loss == pytest.approx(s0.path_loss, abs=1e-12)
        assert s1.distance == s0.distance


def test_remove_names_the_offending_sample(table):
    samples = _samples([2.0, 0.2])
    with pytest.raises(GasRangeError) as err:
        remove_gas_loss(table, samples)
    assert "sample 1" in str(err.value)


def test_restore_requires_a_gas_corrected_model(table):
    base = dict(
        coefficients=CoefficientSet(1, (3.5, 25.0, 2.0)),
        sigma=1.0,
        freq_range=(1.0, 100.0),
        dist_range=(1.0, 5000.0),
    )
    raw = FittedModel(gas_corrected=False, **base)
    with pytest.raises(ContractError):
        restore_gas_loss(table, raw, 1000.0, 60.0)
    corrected = FittedModel(gas_corrected=True, **base)
    total = restore_gas_loss(table, corrected, 1000.0, 60.0)
    assert total == pytest.approx(
        corrected.predict(1000.0, 60.0) + table.gas_loss(1000.0, 60.0), abs=1e-12
    )


def _write_table(path, rows, header="# T=288.15 P=1013.25 rho=7.5"):
    lines = [header, "freq_ghz,atten_db_per_km"]
    lines += [f"{f},{a}" for f, a in rows]
    path.write_text("\n".join(lines) + "\n")


def test_table_csv_parses_conditions(tmp_path):
    rows = [(f, 0.01 + 0.001 * f) for f in np.arange(0.5, 105.0, 0.25)]
    p = tmp_path / "gas.csv"
    _write_table(p, rows)
    t = GasAttenuationTable.from_csv(p)
    assert t.conditions["T"] == 288.15
    assert t.conditions["rho"] == 7.5


def test_table_validation_rejects_bad_inputs(tmp_path):
    p = tmp_path / "gas.csv"
    # span too small
    _write_table(p, [(f, 0.1) for f in np.arange(5.0, 50.0, 0.25)])
    with pytest.raises(DataError):
        GasAttenuationTable.from_csv(p)
    # non-increasing frequency
    with pytest.raises(DataError):
        GasAttenuationTable(
            np.array([1.0, 3.0, 2.0, 100.0]), np.ones(4), {}
        )
    # nonpositive attenuation
    with pytest.raises(DataError):
        GasAttenuationTable(
            np.array([1.0, 2.0, 3.0, 100.0]), np.array([0.1, -0.1, 0.1, 0.1]), {}
        )
    # resonance zones must be finely gridded
    coarse = [1.0, 20.0, 25.0, 45.0, 75.0, 100.0]
    with pytest.raises(DataError):
        GasAttenuationTable(np.array(coarse), np.full(6, 0.1), {})
    # garbage row
    p2 = tmp_path / "bad.csv"
    p2.write_text("freq_ghz,atten_db_per_km\n1.0,abc\n")
    with pytest.raises(DataError):
        GasAttenuationTable.from_csv(p2)
    with pytest.raises(DataError):
        GasAttenuationTable.from_csv(tmp_path / "missing.csv")
