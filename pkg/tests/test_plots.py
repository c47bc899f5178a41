import pytest

from uqbench.exceptions import CsvFormatError
from uqbench.plots import render_cdf_plot, render_snr_plot


CDF_CSV = """group,value,cum_frac,value_norm
correct,0.1,0.5,0.0910239226626158
correct,0.3,1.0,0.27307176798784743
wrong,0.8,1.0,0.7281913813009265
"""

SNR_CSV = """snr_db,uar,mean_unc_correct,ci95_correct,mean_unc_wrong,ci95_wrong
30,0.9,0.2,0.01,0.6,0.05
0,0.6,0.5,0.02,0.7,0.04
-10,0.4,0.9,0.03,,
"""


def test_cdf_plot_deterministic_with_provenance(tmp_path):
    src = tmp_path / "correctness_cdf_ce.csv"
    src.write_text(CDF_CSV)
    out1, out2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_cdf_plot(src, out1, "ce")
    render_cdf_plot(src, out2, "ce")
    assert out1.read_bytes() == out2.read_bytes()
    text = out1.read_text()
    assert text.startswith("<svg")
    assert "sha256" in text and src.name in text
    assert "correct" in text and "wrong" in text


def test_snr_plot_absent_group_noted(tmp_path):
    src = tmp_path / "snr_pn.csv"
    src.write_text(SNR_CSV)
    out = tmp_path / "snr.svg"
    render_snr_plot(src, out, "pn sweep")
    text = out.read_text()
    assert "UAR (right)" in text
    assert "wrong" in text  # partially present group still plotted

    # a wholly empty group earns a legend note
    empty = "snr_db,uar,mean_unc_correct,ci95_correct,mean_unc_wrong,ci95_wrong\n30,0.9,0.2,0.01,,\n"
    src2 = tmp_path / "snr_empty.csv"
    src2.write_text(empty)
    out2 = tmp_path / "snr2.svg"
    render_snr_plot(src2, out2, "t")
    assert "wrong: no samples (omitted)" in out2.read_text()


def test_malformed_csv_reports_line_number(tmp_path):
    src = tmp_path / "broken.csv"
    src.write_text("group,value,cum_frac,value_norm\nok,0.1,0.5,0.1\nbad,row\n")
    with pytest.raises(CsvFormatError, match=":3"):
        render_cdf_plot(src, tmp_path / "x.svg", "t")
    src2 = tmp_path / "broken2.csv"
    src2.write_text("group,value,cum_frac,value_norm\nok,zebra,0.5,0.1\n")
    with pytest.raises(CsvFormatError, match=":2"):
        render_cdf_plot(src2, tmp_path / "y.svg", "t")


def test_wrong_header_rejected(tmp_path):
    src = tmp_path / "odd.csv"
    src.write_text("a,b\n1,2\n")
    with pytest.raises(CsvFormatError, match=":1"):
        render_snr_plot(src, tmp_path / "z.svg", "t")
