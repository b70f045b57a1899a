from __future__ import annotations

import json
from html import escape

import pandas as pd


def _fmt_dict(d: dict) -> str:
    return "<pre>" + escape(json.dumps(d, indent=2, sort_keys=True, default=float)) + "</pre>"


def _table(df: pd.DataFrame, max_rows: int = 200) -> str:
    shown = df.head(max_rows)
    more = "" if len(df) <= max_rows else f'<div class="small">{len(df) - max_rows} more rows in the CSV</div>'
    return shown.to_html(index=False, float_format=lambda v: f"{v:.4g}", na_rep="", border=0) + more


def _headline(tables: dict[str, pd.DataFrame]) -> str:
    cells = []
    for name, df in tables.items():
        if "p_value" not in df.columns or df.empty:
            continue
        p = df["p_value"].dropna()
        share = float((p <= 0.05).mean() * 100) if len(p) else float("nan")
        cells.append(f"<div><strong>{escape(name)}</strong><br/>{len(p)} tests, {share:.1f}% with p &le; 0.05</div>")
    return "" if not cells else f'<div class="card"><h2>Overview</h2><div class="grid">{"".join(cells)}</div></div>'


def build_html_report(
    title: str,
    settings: dict,
    tables: dict[str, pd.DataFrame] | None = None,
    figures: dict[str, str] | None = None,
) -> str:
    """Self-contained HTML page with the run settings, result tables and inline SVG figures."""
    tables = tables or {}
    figures = figures or {}
    table_blocks = "".join(
        f'<div class="card"><h2>{escape(name)}</h2>{_table(df)}</div>' for name, df in tables.items()
    )
    figure_blocks = "".join(
        f'<div class="card"><h3>{escape(name)}</h3>{svg}</div>' for name, svg in figures.items()
    )
    return f"""<!doctype html>
<html>
<head>
<meta charset="utf-8" />
<title>Point pattern report: {escape(title)}</title>
<style>
 body {{ font-family: -apple-system, Segoe UI, Roboto, Helvetica, Arial, sans-serif; margin: 24px; }}
 h1,h2,h3 {{ margin: 0.4rem 0; }}
 .card {{ border: 1px solid #ddd; border-radius: 12px; padding: 16px; margin: 12px 0; }}
 pre {{ background:#111; color:#eee; padding:8px; border-radius:8px; overflow:auto; }}
 table {{ border-collapse: collapse; font-size: 0.85rem; }}
 td, th {{ padding: 2px 8px; border-bottom: 1px solid #eee; text-align: right; }}
 .grid {{ display:grid; grid-template-columns: repeat(auto-fit,minmax(260px,1fr)); gap:12px; }}
 .small {{ color:#666; font-size: 0.9rem; }}
</style>
</head>
<body>
  <h1>{escape(title)}</h1>
  {_headline(tables)}
  {table_blocks}
  {figure_blocks}
  <div class="card">
    <h2>Settings</h2>
    {_fmt_dict(settings)}
  </div>
</body>
</html>
"""
