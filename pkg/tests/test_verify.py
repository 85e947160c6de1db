"""Sweep bookkeeping and claim verdicts, mostly on synthetic rows so each
check can be driven to both outcomes cheaply."""

import json
import math

import pytest

from confmod import (ConfigError, ShearParams, SolverOptions, SweepRecord,
                     Tolerances, VerificationError, check_theorem,
                     dilatation_audit, sweep, write_csv, write_report)
from confmod.fixtures import named_domain
from confmod.verify import CSV_HEADER, DEFAULT_H_LADDER, EXTRA_TOLERANCE

LADDER = (4.0, 8.0, 16.0, 32.0, 64.0)


def make_record(H, ratio, ar=1.0, m_P=None, m_Q=None, err_frac=1e-3,
                gamma=1.0, error=None):
    """A self-consistent row with the claim-relevant fields pinned."""
    m = ratio / (gamma * H)
    m_Q = gamma * H if m_Q is None else m_Q
    m_P = 2.0 + 0.5 * math.log(H) if m_P is None else m_P
    return SweepRecord(
        H=H, m_omega=m, m_omega_err=err_frac * m, gamma=gamma, ratio=ratio,
        bound_ok=True, m_Q=m_Q, m_P=m_P,
        grotzsch_gap=1.0 / m - m_Q - m_P, additivity_ratio=ar,
        mP_over_logH=m_P / math.log(H) if H > 1.0 else float("nan"),
        error=error)


def clean_rows(**overrides):
    ars = overrides.pop("ars", (1.00, 1.02, 1.03, 1.05, 1.06))
    return [make_record(H, ratio=1.0 - 1.0 / H, ar=ar, **overrides)
            for H, ar in zip(LADDER, ars)]


def by_name(report):
    return {v.name: v for v in report.verdicts}


# ---------------------------------------------------------------------------
# check_theorem


def test_clean_ladder_passes_every_claim():
    report = check_theorem(clean_rows())
    assert report.passed
    assert set(by_name(report)) == {"bound", "asymptotics", "lower_bound",
                                    "additivity", "growth"}
    assert all(v.margin > 0 for v in report.verdicts)


def test_bound_fails_above_the_allowance():
    rows = clean_rows()
    rows[2] = make_record(16.0, ratio=1.2, ar=1.03)
    report = check_theorem(rows)
    assert not report.passed
    verdict = by_name(report)["bound"]
    assert not verdict.passed and verdict.margin < 0


def test_asymptotics_needs_floor_and_approach():
    low = [make_record(H, ratio=0.3 + 0.05 * i, ar=ar)
           for i, (H, ar) in enumerate(zip(LADDER, (1.0, 1.02, 1.03, 1.05, 1.06)))]
    assert not by_name(check_theorem(low))["asymptotics"].passed
    falling = [make_record(H, ratio=0.95 - 0.01 * i, ar=ar)
               for i, (H, ar) in enumerate(zip(LADDER, (1.0, 1.02, 1.03, 1.05, 1.06)))]
    assert not by_name(check_theorem(falling))["asymptotics"].passed


def test_lower_bound_flags_a_short_gate_modulus():
    rows = clean_rows()
    rows[1] = make_record(8.0, ratio=1.0 - 1.0 / 8.0, ar=1.02, m_Q=0.9 * 8.0)
    assert not by_name(check_theorem(rows))["lower_bound"].passed


def test_additivity_trend_mode():
    assert by_name(check_theorem(clean_rows()))["additivity"].passed
    # a fall larger than the allowance breaks the trend
    rows = clean_rows(ars=(1.10, 1.05, 1.00, 1.12, 1.16))
    assert not by_name(check_theorem(rows))["additivity"].passed
    # rising but short of the required gain
    rows = clean_rows(ars=(1.00, 1.01, 1.02, 1.03, 1.04))
    assert not by_name(check_theorem(rows))["additivity"].passed
    assert by_name(check_theorem(
        rows, Tolerances(additivity_gain=0.03)))["additivity"].passed


def test_additivity_symmetric_mode_wants_saturation():
    rows = clean_rows(ars=(1.003, 0.998, 1.004, 1.001, 1.002))
    report = check_theorem(rows, symmetric=True)
    assert by_name(report)["additivity"].passed
    assert report.provenance["symmetric"]
    rows = clean_rows(ars=(1.003, 1.2, 1.004, 1.001, 1.002))
    assert not by_name(check_theorem(rows, symmetric=True))["additivity"].passed


@pytest.mark.parametrize("profile", [
    lambda H: 5.0 - 0.5 * math.log(H),                          # shrinking
    lambda H: 2.0 + 0.5 * math.log(H) + 0.3 * math.log(H) ** 2,  # superlog
])
def test_growth_wants_a_log_law(profile):
    ars = (1.0, 1.02, 1.03, 1.05, 1.06)
    rows = [make_record(H, ratio=1.0 - 1.0 / H, ar=ar, m_P=profile(H))
            for H, ar in zip(LADDER, ars)]
    assert not by_name(check_theorem(rows))["growth"].passed


def test_allowance_defaults_to_row_errors():
    # solver error ratio plus the fixed slack
    rows = clean_rows(err_frac=0.05)
    rows[-1] = make_record(64.0, ratio=1.05, ar=1.06, err_frac=0.05)
    assert by_name(check_theorem(rows))["bound"].passed  # 1.05 <= 1.07
    assert not by_name(check_theorem(rows, Tolerances(disc=0.01)))["bound"].passed
    assert rows[0].disc_tolerance == pytest.approx(0.05 + EXTRA_TOLERANCE)


def test_span_preconditions():
    with pytest.raises(VerificationError, match="insufficient-span"):
        check_theorem(clean_rows()[:2])
    short = [make_record(H, ratio=0.9, ar=1.0) for H in (4.0, 8.0, 16.0)]
    with pytest.raises(VerificationError, match="8x"):
        check_theorem(short)
    # failed rows do not count toward the span
    rows = clean_rows()
    rows[0] = make_record(4.0, ratio=0.75, error="divergence")
    rows[-1] = make_record(64.0, ratio=0.98, error="divergence")
    with pytest.raises(VerificationError):
        check_theorem(rows)


# ---------------------------------------------------------------------------
# the sweep itself


def test_sweep_validates_the_ladder():
    dom = named_domain("frame")
    for bad in ([], [4.0, 2.0], [0.0, 4.0], [-1.0]):
        with pytest.raises(ConfigError):
            sweep(dom, bad)


def test_sweep_records_solver_failures_per_row():
    # starve the linear solver so the row fails but the sweep survives
    recs = sweep(named_domain("frame"), [4.0],
                 SolverOptions(levels=1, gap_cells=4, cg_max_iters=2))
    assert len(recs) == 1
    rec = recs[0]
    assert not rec.ok and rec.error
    assert math.isnan(rec.m_omega) and not rec.bound_ok
    with pytest.raises(VerificationError):
        check_theorem(recs)


def test_sweep_rows_are_internally_consistent():
    dom = named_domain("frame")
    recs = sweep(dom, [1.0, 4.0, 8.0], SolverOptions(gap_cells=8, levels=1))
    assert [r.H for r in recs] == [1.0, 4.0, 8.0]
    for rec in recs:
        assert rec.ok
        assert rec.ratio == pytest.approx(rec.gamma * rec.H * rec.m_omega)
        assert rec.additivity_ratio == pytest.approx(
            (rec.m_Q + rec.m_P) * rec.m_omega)
        assert rec.grotzsch_gap == pytest.approx(
            1.0 / rec.m_omega - rec.m_Q - rec.m_P)
        assert rec.m_Q == pytest.approx(rec.gamma * rec.H, rel=1e-6)
    assert math.isnan(recs[0].mP_over_logH)  # log H = 0 at H = 1
    assert recs[1].mP_over_logH == pytest.approx(recs[1].m_P / math.log(4.0))


def test_frame_ladder_verifies_in_symmetric_mode(sweep_cache):
    records = sweep_cache("frame")
    report = check_theorem(records, symmetric=True)
    assert report.passed, [v.detail for v in report.verdicts if not v.passed]


# ---------------------------------------------------------------------------
# artifacts


def test_csv_output_is_stable_and_complete(tmp_path):
    rows = clean_rows()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(rows, a)
    write_csv(rows, b)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(rows)
    assert lines[1].split(",")[5] == "true"  # bound_ok literal


def test_report_artifacts(tmp_path):
    rows = clean_rows()
    nan = float("nan")
    rows.append(SweepRecord(H=128.0, m_omega=nan, m_omega_err=nan, gamma=1.0,
                            ratio=nan, bound_ok=False, m_Q=nan, m_P=nan,
                            grotzsch_gap=nan, additivity_ratio=nan,
                            mP_over_logH=nan, error="budget"))
    report = check_theorem(rows)
    csv_path, json_path = write_report(report, tmp_path / "out")
    assert csv_path.exists() and json_path.exists()
    text = json_path.read_text()
    assert "NaN" not in text  # strict JSON even with failed rows
    doc = json.loads(text)
    assert doc["passed"] is True
    assert len(doc["records"]) == len(rows)
    assert {v["name"] for v in doc["verdicts"]} == {
        "bound", "asymptotics", "lower_bound", "additivity", "growth"}
    failed = [r for r in doc["records"] if r["error"]]
    assert failed and failed[0]["m_omega"] is None


# ---------------------------------------------------------------------------
# shear distortion audit


def test_dilatation_audit_of_a_flat_boundary():
    p = ShearParams(lines=((0.0, 0.5), (0.0, -0.3), (0.0, 0.1)),
                    offset=1.0, break_lo=-0.5, break_hi=0.5)
    audit = dilatation_audit(p, [1.0, 10.0, 100.0])
    assert all(r.K == 1.0 for r in audit.rows)
    assert audit.monotone_ok


def test_dilatation_audit_decays_toward_conformal():
    p = ShearParams(lines=((0.5, 0.0), (-0.25, 0.1), (0.4, -0.05)),
                    offset=1.0, break_lo=-0.3, break_hi=0.4)
    audit = dilatation_audit(p, [1.0, 10.0, 100.0, 1000.0])
    ks = [r.K for r in audit.rows]
    assert all(b < a for a, b in zip(ks, ks[1:]))
    assert audit.monotone_ok
    assert audit.K_at_1 == ks[0]
    # K - 1 ~ max slope / H far out
    assert ks[-1] - 1.0 == pytest.approx(0.5 / 1000.0, rel=0.01)
    for row in audit.rows:
        assert row.envelope_lo <= 1.0 <= row.envelope_hi
        assert row.envelope_hi == row.K
