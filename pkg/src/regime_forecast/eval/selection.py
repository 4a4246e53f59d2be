"""Ranking fitted chains by information criteria."""

from __future__ import annotations

import csv
import io

from ..markov.criteria import information_criteria

SELECTION_COLUMNS = ("rank", "states", "components", "family", "log_likelihood", "n_params", "aic", "bic")


def model_selection_table(fits, T: int) -> list:
    """Rows for ``(config, log_likelihood, model)`` triples, best BIC first.

    ``config`` needs ``num_states``, ``num_components`` and ``family``
    attributes (a :class:`FitConfig` works). Ties keep input order.
    """
    rows = []
    for cfg, ll, model in fits:
        ic = information_criteria(model, ll, T)
        rows.append({
            "states": int(cfg.num_states), "components": int(cfg.num_components), "family": cfg.family,
            "log_likelihood": float(ll), "n_params": int(ic["n_params"]), "aic": ic["aic"], "bic": ic["bic"],
        })
    rows.sort(key=lambda r: r["bic"])
    for i, r in enumerate(rows, start=1):
        r["rank"] = i
    return rows


def _cell(v):
    return repr(v) if isinstance(v, float) else str(v)


def selection_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SELECTION_COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in SELECTION_COLUMNS])
    return buf.getvalue()


def selection_text(rows) -> str:
    """Fixed-width rendering for terminals and logs."""
    cells = [list(SELECTION_COLUMNS)]
    for r in rows:
        cells.append([
            str(r["rank"]), str(r["states"]), str(r["components"]), r["family"],
            f"{r['log_likelihood']:.4f}", str(r["n_params"]), f"{r['aic']:.4f}", f"{r['bic']:.4f}",
        ])
    widths = [max(len(row[j]) for row in cells) for j in range(len(SELECTION_COLUMNS))]
    lines = []
    for row in cells:
        lines.append("  ".join(c.rjust(w) if j != 3 else c.ljust(w) for j, (c, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"
