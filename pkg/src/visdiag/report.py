"""Report bundle: JSON/CSV exports, terminal table and SVG bar charts."""

import csv
import hashlib
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__  # noqa: E402
from .taxonomy import KINDS  # noqa: E402

KIND_COLORS = {
    "Cls": "#4c72b0",
    "Dup": "#dd8452",
    "Spat": "#55a868",
    "Temp": "#c44e52",
    "Both": "#8172b3",
    "Bkg": "#937860",
    "Miss": "#da8bc3",
}


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(config, inputs=None, timings=None):
    """Run manifest; ``inputs`` maps a role to a file path."""
    manifest = {
        "tool": "visdiag",
        "version": __version__,
        "config": config.snapshot(),
        "inputs": {
            role: {"name": Path(p).name, "sha256": file_digest(p)}
            for role, p in sorted((inputs or {}).items())
        },
    }
    if timings is not None:
        manifest["timings"] = {k: round(v, 6) for k, v in timings.items()}
    return manifest


def _cat_key(c):
    return str(c)


def summary_json(analysis, manifest):
    res = analysis.result
    cats = analysis.dataset.categories
    per_cat = res.per_category()
    return {
        "manifest": manifest,
        "map": res.mAP,
        "ap50": res.ap50,
        "ar": {str(k): v for k, v in res.ar.items()},
        "n_gt": analysis.ranges.global_["n_gt"],
        "n_pred": analysis.ranges.global_["n_pred"],
        "per_category": [
            {"category_id": c, "name": cats.get(c, str(c)), **per_cat[c]} for c in res.categories
        ],
        "errors": analysis.error_counts,
        "weights": weights_json(analysis)["weights"],
        "base_ap50": analysis.weights.base_ap50,
        "fix_all_ap50": analysis.weights.fix_all_ap50,
        "ranges": {b.label: {"n_gt": b.n_gt, "map": b.map} for b in analysis.ranges.bins},
    }


def weights_json(analysis, manifest=None):
    out = analysis.weights.to_json()
    if manifest is not None:
        out = {"manifest": manifest, **out}
    return out


def ranges_json(analysis, manifest=None):
    out = analysis.ranges.to_json()
    if manifest is not None:
        out = {"manifest": manifest, **out}
    return out


def errors_jsonl(analysis):
    lines = [
        json.dumps(r.to_json(analysis.dataset), sort_keys=True, separators=(",", ":"))
        for r in analysis.records
    ]
    return "".join(line + "\n" for line in lines)


def _fmt(x):
    return "n/a" if x is None else f"{x:.2f}"


def csv_rows(analysis):
    """Wide rows, one per (category, bin); category ``all`` carries the weights."""
    header = ["category_id", "category", "bin", "n_gt", "map", "ap50"] + list(KINDS)
    rows = [header]
    cats = analysis.dataset.categories
    sections = [("all", None, analysis.ranges.global_, analysis.result.per_category())]
    for b in analysis.ranges.bins:
        g = {"n_gt": b.n_gt, "map": b.map, "ap50": b.ap50, "weights": b.weights}
        sections.append((b.label, b, g, b.per_category))
    for label, _, g, per_cat in sections:
        w = g.get("weights") or {}
        rows.append(
            ["all", "all", label, g["n_gt"], _fmt(g["map"]), _fmt(g["ap50"])]
            + [_fmt(w.get(k)) for k in KINDS]
        )
        for c in sorted(per_cat, key=_cat_key):
            m = per_cat[c]
            rows.append(
                [c, cats.get(c, str(c)), label, m["n_gt"], _fmt(m["map"]), _fmt(m["ap50"])]
                + [""] * len(KINDS)
            )
    return rows


def csv_text(analysis):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(csv_rows(analysis))
    return buf.getvalue()


def terminal_table(summary):
    """Plain-text report; every figure shown comes from ``summary``."""
    lines = []
    ar = summary["ar"]
    lines.append(f"mAP {_fmt(summary['map'])}   AP@50 {_fmt(summary['ap50'])}   "
                 + "   ".join(f"AR@{k} {_fmt(v)}" for k, v in ar.items()))
    lines.append(f"GT tracks {summary['n_gt']}   predictions {summary['n_pred']}")
    lines.append("")
    lines.append(f"{'range':<10}{'n_gt':>8}{'mAP':>10}")
    for label, r in summary["ranges"].items():
        lines.append(f"{label:<10}{r['n_gt']:>8}{_fmt(r['map']):>10}")
    lines.append("")
    lines.append(f"{'error':<8}{'count':>8}{'dAP@50':>10}")
    for k in KINDS:
        lines.append(f"{k:<8}{summary['errors'][k]:>8}{_fmt(summary['weights'][k]):>10}")
    lines.append(f"base AP@50 {_fmt(summary['base_ap50'])}   "
                 f"after fixing all {_fmt(summary['fix_all_ap50'])}")
    return "\n".join(lines)


def _chart_style():
    return {
        "svg.fonttype": "path",
        "svg.hashsalt": "visdiag",
        "font.family": "DejaVu Sans",
        "font.size": 9,
    }


def render_error_chart(data, path=None, title=None):
    """Bar chart of error weights.

    ``data`` is either ``{kind: weight}`` (one bar per kind) or a list of
    ``(label, {kind: weight} | None)`` pairs drawn as grouped clusters.
    Bars carry their value to two decimals.  Returns the figure.
    """
    with plt.rc_context(_chart_style()):
        if isinstance(data, dict):
            fig, ax = plt.subplots(figsize=(6, 3.2))
            kinds = [k for k in KINDS if k in data]
            vals = [float(data[k] or 0.0) for k in kinds]
            bars = ax.bar(kinds, vals, color=[KIND_COLORS[k] for k in kinds])
            for b, k in zip(bars, kinds):
                ax.annotate(_fmt(data[k]), (b.get_x() + b.get_width() / 2, b.get_height()),
                            ha="center", va="bottom", fontsize=8)
            ax.set_ylabel("dAP@50")
        else:
            groups = list(data)
            fig, ax = plt.subplots(figsize=(max(6, 2.4 * len(groups)), 3.4))
            n = len(KINDS)
            width = 0.8 / n
            for gi, (label, weights) in enumerate(groups):
                for ki, k in enumerate(KINDS):
                    v = None if weights is None else weights.get(k)
                    x = gi + (ki - (n - 1) / 2) * width
                    ax.bar(x, float(v or 0.0), width, color=KIND_COLORS[k],
                           label=k if gi == 0 else None)
                    ax.annotate(_fmt(v), (x, float(v or 0.0)), ha="center", va="bottom",
                                fontsize=6, rotation=90)
            ax.set_xticks(range(len(groups)))
            ax.set_xticklabels([g[0] for g in groups])
            ax.set_ylabel("dAP@50")
            ax.legend(ncol=len(KINDS), fontsize=7, loc="upper center",
                      bbox_to_anchor=(0.5, -0.12), frameon=False)
        ax.set_ylim(bottom=0)
        ymax = ax.get_ylim()[1]
        ax.set_ylim(0, max(ymax * 1.15, 1.0))
        if title:
            ax.set_title(title)
        fig.tight_layout()
        if path is not None:
            fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return fig


def write_bundle(analysis, out_dir, formats=("json", "csv", "svg"), inputs=None):
    """Write every requested output into ``out_dir``; returns the summary dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = make_manifest(analysis.config, inputs)
    summary = summary_json(analysis, manifest)

    def dump(name, obj):
        (out / name).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")

    if "json" in formats:
        dump("summary.json", summary)
        dump("weights.json", weights_json(analysis, manifest))
        dump("ranges.json", ranges_json(analysis, manifest))
        (out / "errors.jsonl").write_text(errors_jsonl(analysis))
        dump("manifest.json", make_manifest(analysis.config, inputs, analysis.timings))
    if "csv" in formats:
        (out / "summary.csv").write_text(csv_text(analysis))
    if "svg" in formats:
        fig = render_error_chart(analysis.weights.weights, out / "error_weights.svg",
                                 "Error weights")
        plt.close(fig)
        groups = [(b.label, b.weights) for b in analysis.ranges.bins]
        fig = render_error_chart(groups, out / "range_weights.svg", "Error weights by temporal range")
        plt.close(fig)
    return summary
