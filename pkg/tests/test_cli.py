"""End-to-end CLI runs, driving main(argv) in-process."""

import json
import math

import pytest

from nghjb.cli import main
from nghjb.model import MarketParams
from nghjb.trial import rate_constants


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if ln]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_identities_default_all_pass(capsys):
    code, out, err = run(capsys, "identities")
    header, rows = parse_csv(out)
    assert code == 0
    assert header == ["identity", "n", "b", "value", "expected", "rel_err"]
    assert len(rows) == 45  # n in {1,2,3} x b in {0.5,1,2} x 5 identities
    assert "45/45 identities passed" in err
    assert all(float(r[5]) <= 1e-10 for r in rows)


def test_identities_low_order_fails_honestly(capsys):
    code, out, err = run(capsys, "identities", "--order", "1")
    assert code == 1
    assert "FAIL" in err


def test_identities_n0_has_only_the_mean(capsys):
    code, out, err = run(capsys, "identities", "--n", "0")
    _, rows = parse_csv(out)
    assert code == 0
    assert len(rows) == 3
    assert {r[0] for r in rows} == {"mean_x"}


def test_ng_solve_slopes_match_rate_constants(capsys):
    code, out, err = run(capsys, "ng-solve", "--n", "2", "--dt", "0.1")
    header, rows = parse_csv(out)
    assert code == 0
    assert header == ["t", "log_alpha", "log_beta", "log_zeta"]
    assert len(rows) == 11
    rc = rate_constants(MarketParams(n=2, k=1.0))
    t0, t1 = rows[0], rows[-1]
    span = float(t1[0]) - float(t0[0])
    assert span == pytest.approx(1.0)
    for col, want in ((1, rc.c_alpha), (2, rc.c_beta), (3, rc.c_zeta)):
        slope = (float(t1[col]) - float(t0[col])) / span
        assert slope == pytest.approx(want, rel=1e-12)
    rec = json.loads(err)
    assert rec["entry"] == "M[2,2]"
    assert rec["n"] == 2
    assert rec["quadrature"] / rec["printed"] == pytest.approx(2.0, rel=1e-12)


def test_ng_solve_paper_mode_doubles_the_zeta_rate(capsys):
    code_o, out_o, _ = run(capsys, "ng-solve", "--n", "2", "--dt", "0.5", "--mode", "oracle")
    code_p, out_p, _ = run(capsys, "ng-solve", "--n", "2", "--dt", "0.5", "--mode", "paper")
    assert code_o == code_p == 0
    _, rows_o = parse_csv(out_o)
    _, rows_p = parse_csv(out_p)
    dz_o = float(rows_o[-1][3]) - float(rows_o[0][3])
    dz_p = float(rows_p[-1][3]) - float(rows_p[0][3])
    assert dz_p == pytest.approx(2.0 * dz_o, rel=1e-12)
    # alpha and beta dynamics are shared
    assert rows_o[-1][2] == rows_p[-1][2]


def test_ng_solve_paper_mode_requires_closed_assembler(capsys):
    code, out, err = run(capsys, "ng-solve", "--mode", "paper", "--assembler", "quadrature")
    assert code == 2
    assert "config error" in err


def test_fd_solve_emits_every_node(capsys):
    code, out, err = run(capsys, "fd-solve", "--d", "1", "--N", "3")
    header, rows = parse_csv(out)
    assert code == 0
    assert header == ["x", "u"]
    assert len(rows) == 9
    assert "clamp_tally" in err
    # mesh covers [0, 4]
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == 4.0


def test_compare_d1_errors_shrink(capsys):
    code, out, err = run(capsys, "compare", "--d", "1", "--N", "3,4")
    _, rows = parse_csv(out)
    assert code == 0
    mean_abs = {int(r[0]): float(r[2]) for r in rows if r[1] == "mean_abs"}
    assert mean_abs[4] < mean_abs[3]
    probes = [r for r in rows if r[1] == "self_abs_probe"]
    assert len(probes) == 1 and int(probes[0][0]) == 4


def test_compare_metric_filter(capsys):
    code, out, _ = run(capsys, "compare", "--d", "1", "--N", "3,4", "--metric", "mean_rel_pct")
    _, rows = parse_csv(out)
    assert code == 0
    assert [r[1] for r in rows] == ["mean_rel_pct", "mean_rel_pct"]


def test_compare_unknown_metric(capsys):
    code, _, err = run(capsys, "compare", "--d", "1", "--N", "3", "--metric", "bogus")
    assert code == 2
    assert "bogus" in err


def test_compare_at_zero_horizon(tmp_path, capsys):
    # both sides reduce to the terminal payoff; only exp(log) round-off is left
    cfg = tmp_path / "t0.cfg"
    cfg.write_text("T = 0\n")
    code, out, _ = run(capsys, "compare", "--config", str(cfg), "--d", "1", "--N", "3")
    _, rows = parse_csv(out)
    assert code == 0
    vals = {r[1]: float(r[2]) for r in rows}
    assert vals["mean_abs"] <= 1e-15
    assert vals["mean_rel_pct"] <= 1e-12
    assert vals["mean_abs_log10"] <= -12.0


def test_sweep_single_point_reproduces_compare(capsys):
    code_c, out_c, _ = run(capsys, "compare", "--d", "1", "--N", "4", "--metric", "mean_rel_pct")
    code_s, out_s, _ = run(capsys, "sweep", "--d", "1", "--N", "4", "--param", "b0", "--points", "1")
    assert code_c == code_s == 0
    _, rows_c = parse_csv(out_c)
    _, rows_s = parse_csv(out_s)
    assert float(rows_s[0][1]) == 1.0
    assert rows_s[0][2] == rows_c[0][2]  # identical full-precision strings


def test_sweep_unknown_param_from_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("param = volatility_of_volatility\n")
    code, _, err = run(capsys, "sweep", "--config", str(cfg), "--d", "1", "--N", "3", "--points", "1")
    assert code == 2
    assert "volatility_of_volatility" in err


def test_price_defaults(capsys):
    code, out, _ = run(capsys, "price")
    header, rows = parse_csv(out)
    assert code == 0
    assert header == ["k", "p_closed", "p_bisect", "residual"]
    by_k = {float(r[0]): r for r in rows}
    assert float(by_k[0.0][1]) == 0.0
    assert abs(float(by_k[0.0][2])) <= 1e-10
    p1 = float(by_k[1.0][1])
    assert p1 == pytest.approx(1.1019863003706214, rel=1e-12)
    assert abs(p1 - float(by_k[1.0][2])) <= 1e-10
    assert float(by_k[1.0][3]) <= 1e-9


def test_price_ignores_initial_wealth(capsys):
    # prices are identical strings; the substitution residual is evaluated
    # at x0 - p and may wiggle at round-off, so skip that column
    _, out_a, _ = run(capsys, "price", "--x0", "1.0")
    _, out_b, _ = run(capsys, "price", "--x0", "7.5")
    _, rows_a = parse_csv(out_a)
    _, rows_b = parse_csv(out_b)
    assert [r[:3] for r in rows_a] == [r[:3] for r in rows_b]


def test_mc_check_small_run(capsys):
    code, out, err = run(capsys, "mc-check", "--paths", "2000", "--steps", "50")
    header, rows = parse_csv(out)
    assert code == 0
    assert header == ["mean", "stderr", "z", "neg_wealth_frac"]
    assert len(rows) == 1
    assert float(rows[0][2]) <= 3.0
    assert "value function" in err


def test_mc_check_zero_sharpe_is_exact(tmp_path, capsys):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text("lam = 0\npaths = 500\nsteps = 20\n")
    code, out, _ = run(capsys, "mc-check", "--config", str(cfg))
    _, rows = parse_csv(out)
    assert code == 0
    assert float(rows[0][1]) == 0.0
    assert float(rows[0][2]) == 0.0


def test_mc_check_rejects_factor_models(tmp_path, capsys):
    cfg = tmp_path / "n1.cfg"
    cfg.write_text("n = 1\n")
    code, _, err = run(capsys, "mc-check", "--config", str(cfg))
    assert code == 2
    assert "n = 0" in err


def test_config_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "ids.cfg"
    cfg.write_text("# deliberately too coarse\norder = 1\n")
    code_file, _, _ = run(capsys, "identities", "--config", str(cfg))
    code_flag, _, _ = run(capsys, "identities", "--config", str(cfg), "--order", "8")
    assert code_file == 1
    assert code_flag == 0


@pytest.mark.parametrize(
    "content,needle",
    [
        ("volatility = 3\n", "unknown key"),
        ("order = eight\n", "bad value"),
        ("order 8\n", "expected key = value"),
    ],
)
def test_config_rejects_malformed_files(tmp_path, capsys, content, needle):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    code, _, err = run(capsys, "identities", "--config", str(cfg))
    assert code == 2
    assert needle in err


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "identities", "--config", "/nonexistent/none.cfg")
    assert code == 2


def test_out_flag_writes_file(tmp_path, capsys):
    dest = tmp_path / "field.csv"
    code, out, err = run(capsys, "fd-solve", "--d", "1", "--N", "3", "--out", str(dest))
    assert code == 0
    assert out == ""
    lines = dest.read_text().splitlines()
    assert lines[0] == "x,u"
    assert len(lines) == 10


def test_cfl_violation_exits_as_config_error(capsys):
    code, _, err = run(capsys, "fd-solve", "--d", "1", "--N", "5", "--dt", "0.5")
    assert code == 2
    assert "config error" in err
