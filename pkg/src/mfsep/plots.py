"""Deterministic standalone SVG figures with their data embedded.

Each figure carries the table it was drawn from as CSV inside a ``<desc>``
element, so the SVG alone is enough to recover the numbers. Hash salt and
date metadata are pinned so identical data gives identical bytes.
"""

from __future__ import annotations

import io
from typing import Sequence
from xml.sax.saxutils import escape

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["tv_vs_n", "hm_success_vs_bits", "distinguisher_bars", "embedded_data"]

_RC = {"svg.hashsalt": "mfsep", "svg.fonttype": "none", "font.size": 9}


def _save(fig, table: str) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "mfsep"})
    plt.close(fig)
    svg = buf.getvalue()
    head = svg.index(">", svg.index("<svg")) + 1
    return svg[:head] + '\n<desc id="data">' + escape(table) + "</desc>" + svg[head:]


def _csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(columns)]
    lines += [",".join("" if v is None else str(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def embedded_data(svg: str) -> str:
    """The CSV table stored in a figure produced here."""
    from xml.sax.saxutils import unescape

    start = svg.index('<desc id="data">') + len('<desc id="data">')
    return unescape(svg[start:svg.index("</desc>", start)])


def tv_vs_n(summary: Sequence[dict]) -> str:
    """Median TV (with interquartile bars) against n, one line per arm."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for sid in dict.fromkeys(s["strategy"] for s in summary):
            pts = sorted((s["n"], s["tv_median"], s["tv_q25"], s["tv_q75"]) for s in summary if s["strategy"] == sid)
            ns, med, lo, hi = zip(*pts)
            err = [[m - a for m, a in zip(med, lo)], [b - m for m, b in zip(med, hi)]]
            ax.errorbar(ns, med, yerr=err, marker="o", capsize=3, label=sid)
        ax.set_xlabel("n (qubits)")
        ax.set_ylabel("median TV to target")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        fig.tight_layout()
        rows = [(s["n"], s["strategy"], s["tv_median"], s["tv_q25"], s["tv_q75"]) for s in summary]
        return _save(fig, _csv(["n", "strategy", "tv_median", "tv_q25", "tv_q75"], rows))


def hm_success_vs_bits(records: Sequence[dict]) -> str:
    """Success rate against mean bits sent; ``records`` have protocol, n, bits, success."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for proto in dict.fromkeys(r["protocol"] for r in records):
            pts = sorted((r["bits"], r["success"], r["n"]) for r in records if r["protocol"] == proto)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=proto)
        ax.set_xscale("symlog", linthresh=1)
        ax.set_xlabel("bits sent (mean)")
        ax.set_ylabel("success rate")
        ax.set_ylim(0.4, 1.02)
        ax.legend()
        fig.tight_layout()
        rows = [(r["protocol"], r["n"], r["bits"], r["success"]) for r in records]
        return _save(fig, _csv(["protocol", "n", "bits", "success"], rows))


def distinguisher_bars(reports: Sequence[dict]) -> str:
    """Acceptance probability on PRF and uniform oracles per (strategy, n)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        labels = [f"{r['strategy']}\nn={r['n']}" for r in reports]
        xs = range(len(reports))
        for off, key, ci in ((-0.2, "p_prf", "prf"), (0.2, "p_rand", "rand")):
            vals = [r[key] for r in reports]
            err = [[v - r["ci"][ci][0] for v, r in zip(vals, reports)],
                   [r["ci"][ci][1] - v for v, r in zip(vals, reports)]]
            ax.bar([x + off for x in xs], vals, width=0.4, yerr=err, capsize=3,
                   label="PRF oracle" if ci == "prf" else "uniform oracle")
        ax.set_xticks(list(xs), labels)
        ax.set_ylabel("P(distinguisher outputs 1)")
        ax.set_ylim(0, 1.05)
        ax.legend()
        fig.tight_layout()
        rows = [(r["strategy"], r["n"], r["p_prf"], r["p_rand"], r["gap"]) for r in reports]
        return _save(fig, _csv(["strategy", "n", "p_prf", "p_rand", "gap"], rows))
