import numpy as np
import pandas as pd
# tests/test_basic.py
from app.config import RunConfig
from eval.report import build_html_report
from eval.screening import fit_intensity
from pattern.census import multitype_from_census
from pattern.geometry import RectWindow
from stats.kfunction import k_inhom
from stats.summary import RGrid
from synth.forest import synthetic_census, synthetic_forest

W = RectWindow(0.0, 0.0, 100.0, 50.0)

def test_census_to_k_curve():
    latest, _ = synthetic_forest(2, 0.0, W, 1, mean_count=80)
    departed, _ = synthetic_forest(2, 0.0, W, 2, mean_count=10)
    m = multitype_from_census(synthetic_census(latest, departed), 8, "alive", W)
    assert m.counts() == latest.counts()
    cfg = RunConfig(window=W.bbox(), nx=20, ny=10, bandwidth=10.0, r_max_univariate=8.0, r_max_cross=10.0)
    h, lam = fit_intensity(m["sp000"], cfg)
    assert h.h == 10.0 and lam.shape == (20, 10)
    k = k_inhom(m["sp000"], lam, RGrid.linspace(8.0, 32))
    assert k.value[0] == 0 and np.all(np.diff(k.value) >= 0)

def test_report_renders():
    html = build_html_report("demo", {"seed": 1}, figures={"empty": "<svg></svg>"})
    assert "<h1>demo</h1>" in html and "<svg></svg>" in html

def test_report_headline_counts_small_p_values():
    table = pd.DataFrame({"species": ["a", "b", "c", "d"], "p_value": [0.01, 0.2, None, 0.05]})
    html = build_html_report("screen", {"seed": 2}, tables={"species": table})
    assert "3 tests, 66.7% with p &le; 0.05" in html
    assert "Result" not in html
