import re

import pytest

from hardyhenon4.params import ProblemParams, classify_regime
from hardyhenon4.dynamics import CONVERGES_TO_FIXED_POINT
from hardyhenon4.experiments import (
    ExperimentConfig,
    ResultTable,
    run_atlas,
    run_classification_sweep,
    run_energy_audit,
    run_experiment,
    run_green_study,
)

WSTAR = 1.9917354429142955


def _col(table: ResultTable, name: str) -> int:
    return table.schema.index(name)


def test_config_validation():
    with pytest.raises(ValueError, match="unknown experiment kind"):
        ExperimentConfig(kind="spectral")
    with pytest.raises(ValueError, match="triples"):
        ExperimentConfig(kind="atlas", param_grid=((6, 0.0),))
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", tol=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", samples=-1)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", samples=2.5)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", seed=2**64)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", box=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", horizon=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(kind="atlas", grid_nodes=100)


def test_config_accepts_params_objects():
    cfg = ExperimentConfig(kind="atlas", param_grid=(ProblemParams(6, 0.0, 4.0),))
    assert cfg.param_grid == ((6, 0.0, 4.0),)


def test_config_digest_tracks_content():
    a = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0),))
    b = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0),))
    c = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0),), seed=1)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert re.fullmatch(r"[0-9a-f]{64}", a.digest())


def test_result_table_checks_row_arity():
    with pytest.raises(ValueError, match="row 0"):
        ResultTable(kind="atlas", schema=("a", "b"), rows=((1.0,),), config_digest="x")


def test_atlas_rows():
    cfg = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0), (6, 0.0, 5.0)))
    table = run_atlas(cfg)
    assert len(table.rows) == 2
    row = table.rows[0]
    assert row[_col(table, "serrin")] == 3.0
    assert row[_col(table, "hardy_sobolev")] == 5.0
    assert row[_col(table, "a0")] == pytest.approx(640.0 / 81.0, rel=1e-14)
    assert row[_col(table, "regime")] == "Subcritical"
    assert row[_col(table, "signs_ok")] is True
    assert row[_col(table, "w_star")] == WSTAR
    assert row[_col(table, "note")] == ""
    crit = table.rows[1]
    assert crit[_col(table, "regime")] == "Critical"
    assert crit[_col(table, "a1")] == 0.0
    assert crit[_col(table, "a3")] == 0.0


def test_atlas_error_row_and_empty_grid():
    cfg = ExperimentConfig(kind="atlas", param_grid=((4, 0.0, 4.0),))
    table = run_atlas(cfg)
    assert len(table.rows) == 1
    assert "n > 2m" in table.rows[0][_col(table, "note")]
    assert table.rows[0][_col(table, "regime")] is None
    empty = run_atlas(ExperimentConfig(kind="atlas"))
    assert empty.rows == ()


def test_atlas_regimes_agree_with_classifier():
    grid = ((6, 0.0, 4.0), (6, 0.0, 5.5), (6, -1.0, 5.0), (5, -1.0, 3.2))
    table = run_atlas(ExperimentConfig(kind="atlas", param_grid=grid))
    for triple, row in zip(grid, table.rows):
        want = classify_regime(ProblemParams(*triple)).regime
        assert row[_col(table, "regime")] == want


def test_serialization_deterministic_and_clean():
    cfg = ExperimentConfig(
        kind="classification", param_grid=((6, 0.0, 4.0),),
        samples=2, seed=9, horizon=-12.0,
    )
    first = run_classification_sweep(cfg).to_csv()
    second = run_classification_sweep(cfg).to_csv()
    assert first == second
    assert "np.float64" not in first
    head = first.splitlines()
    assert head[0] == "# result-table kind=classification"
    assert head[1] == f"# config sha256={cfg.digest()}"
    assert head[2].startswith("# generator hardyhenon4 ")
    assert "numpy" in head[2]


def test_seed_changes_draws():
    base = dict(
        kind="classification", param_grid=((6, 0.0, 4.0),), samples=2, horizon=-12.0
    )
    t0 = run_classification_sweep(ExperimentConfig(seed=0, **base))
    t1 = run_classification_sweep(ExperimentConfig(seed=1, **base))
    w0 = [r[_col(t0, "terminal_w0")] for r in t0.rows if r[_col(t0, "kind")] == "draw"]
    w1 = [r[_col(t1, "terminal_w0")] for r in t1.rows if r[_col(t1, "kind")] == "draw"]
    assert w0 != w1


def test_draws_are_a_prefix_when_samples_grow():
    base = dict(kind="classification", param_grid=((6, 0.0, 4.0),), seed=5, horizon=-12.0)
    small = run_classification_sweep(ExperimentConfig(samples=3, **base))
    large = run_classification_sweep(ExperimentConfig(samples=6, **base))
    draws_small = [r for r in small.rows if r[_col(small, "kind")] == "draw"]
    draws_large = [r for r in large.rows if r[_col(large, "kind")] == "draw"]
    assert draws_large[:3] == draws_small


def test_collapsed_sampling_box_yields_pure_fixed_point_class():
    cfg = ExperimentConfig(
        kind="classification", param_grid=((6, 0.0, 4.0),),
        box=1e-20, tol=1e-13, horizon=-7.0, window=2.0, samples=8, seed=1,
    )
    table = run_classification_sweep(cfg)
    draws = [r for r in table.rows if r[_col(table, "kind")] == "draw"]
    assert len(draws) == 8
    assert all(r[_col(table, "limit_class")] == CONVERGES_TO_FIXED_POINT for r in draws)
    summaries = [r for r in table.rows if r[_col(table, "kind")] == "summary"]
    assert len(summaries) == 1
    assert summaries[0][_col(table, "limit_class")] == CONVERGES_TO_FIXED_POINT
    assert summaries[0][_col(table, "count")] == 8


def test_sweep_rejects_points_outside_the_window():
    cfg = ExperimentConfig(
        kind="classification", param_grid=((6, 0.0, 9.0), (5, -1.0, 3.2)), samples=2
    )
    table = run_classification_sweep(cfg)
    assert len(table.rows) == 2
    for row in table.rows:
        assert row[_col(table, "kind")] == "reject"
        assert row[_col(table, "note")] != ""
    assert "(3, 5)" in table.rows[0][_col(table, "note")]


def test_sweep_runs_exploratory_positive_alpha():
    cfg = ExperimentConfig(
        kind="classification", param_grid=((6, 1.0, 4.5),),
        samples=2, horizon=-12.0, seed=2,
    )
    table = run_classification_sweep(cfg)
    draws = [r for r in table.rows if r[_col(table, "kind")] == "draw"]
    assert len(draws) == 2
    for row in draws:
        assert row[_col(table, "note")].startswith("exploratory: ")


def test_energy_audit_cells():
    cfg = ExperimentConfig(
        kind="energy-audit", param_grid=((6, 0.0, 4.0),), samples=4, seed=3
    )
    table = run_energy_audit(cfg)
    assert len(table.rows) == 4
    for row in table.rows:
        assert row[_col(table, "regime")] == "Subcritical"
        assert row[_col(table, "max_violation")] == 0.0
        assert row[_col(table, "rate_mismatch")] <= 1e-4
        assert row[_col(table, "note")] == ""
        assert isinstance(row[_col(table, "e_initial")], float)
        assert isinstance(row[_col(table, "e_final")], float)


def test_energy_audit_flags_out_of_range():
    cfg = ExperimentConfig(
        kind="energy-audit", param_grid=((6, 0.0, 2.9),), samples=2, seed=3
    )
    table = run_energy_audit(cfg)
    assert len(table.rows) == 2
    for row in table.rows:
        assert row[_col(table, "regime")] == "OutOfRange"
        assert row[_col(table, "note")] != ""


def test_green_study_rows():
    cfg = ExperimentConfig(
        kind="green-study", param_grid=((6, 0.0, 4.0),),
        samples=2, box=1e-5, tol=1e-12, seed=11,
    )
    table = run_green_study(cfg)
    cases = [r[_col(table, "case")] for r in table.rows]
    assert cases == ["removable", "exact", "perturbed", "perturbed"]

    removable = table.rows[0]
    assert removable[_col(table, "note")].startswith("superharmonic rejected:")
    assert removable[_col(table, "l1_converges")] is True
    assert removable[_col(table, "weighted_diverges")] is False

    exact = table.rows[1]
    assert exact[_col(table, "ratio")] > 4.0
    assert exact[_col(table, "tau")] == 1.0
    assert exact[_col(table, "l1_converges")] is True
    assert exact[_col(table, "weighted_diverges")] is True
    assert exact[_col(table, "sup0")] == pytest.approx(WSTAR, rel=1e-12)

    for row in table.rows[2:]:
        assert row[_col(table, "note")] == ""
        assert row[_col(table, "tau")] == 1.0
        assert row[_col(table, "neglap_min")] > 0.0
        assert row[_col(table, "sup0")] == pytest.approx(WSTAR, abs=1e-3)


def test_green_study_rejects_without_equilibrium():
    cfg = ExperimentConfig(
        kind="green-study", param_grid=((5, -1.0, 3.2),), samples=1
    )
    table = run_green_study(cfg)
    cases = [r[_col(table, "case")] for r in table.rows]
    assert cases == ["removable", "reject"]
    assert "a0" in table.rows[1][_col(table, "note")]


def test_run_experiment_dispatch():
    cfg = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0),))
    assert run_experiment(cfg).to_csv() == run_atlas(cfg).to_csv()


def test_aligned_rendering():
    cfg = ExperimentConfig(kind="atlas", param_grid=((6, 0.0, 4.0),))
    text = run_atlas(cfg).to_aligned()
    lines = text.splitlines()
    assert lines[3].startswith("n ")
    assert "Subcritical" in text
    assert not any(ln.endswith(" ") for ln in lines)
