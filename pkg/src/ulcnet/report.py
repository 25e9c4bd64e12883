"""Text tables and matplotlib figures for the CLI reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
})


def layer_table(report: dict, sep: str = "\t") -> str:
    """Per-layer breakdown as delimited text, header row first, totals last."""
    rows = [sep.join(["layer", "params", "macs_per_frame", "gmacs", "output_shape"])]
    for layer in report["layers"]:
        shape = "x".join(str(d) for d in layer["output_shape"])
        rows.append(sep.join([
            layer["name"], str(layer["params"]), str(layer["macs_per_frame"]),
            f"{layer['gmacs']:.6f}", shape,
        ]))
    rows.append(sep.join([
        "total", str(report["total_params"]), str(report["macs_per_frame"]), f"{report['gmacs']:.6f}", "",
    ]))
    return "\n".join(rows)


def complexity_figure(report: dict, path) -> None:
    names = [layer["name"] for layer in report["layers"]]
    params = np.array([layer["params"] for layer in report["layers"]]) / 1e3
    macs = np.array([layer["gmacs"] for layer in report["layers"]]) * 1e3
    y = np.arange(len(names))

    fig, (ax_p, ax_m) = plt.subplots(1, 2, figsize=(8.0, 0.28 * len(names) + 1.2), sharey=True)
    ax_p.barh(y, params, color="tab:blue")
    ax_p.set_yticks(y, names)
    ax_p.invert_yaxis()
    ax_p.set_xlabel("parameters [K]")
    ax_p.set_title(f"total {report['total_params'] / 1e6:.3f} M", fontsize=9)
    ax_m.barh(y, macs, color="tab:orange")
    ax_m.set_xlabel("MMACS (per second of audio)")
    ax_m.set_title(f"total {report['gmacs']:.3f} GMACS", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def bench_figure(result: dict, path) -> None:
    times = np.asarray(result["frame_times_ms"])
    budget = result["frame_budget_ms"]
    fig, ax = plt.subplots(figsize=(5.0, 3.0))
    ax.hist(times, bins=50, color="tab:green")
    ax.axvline(budget, color="k", linestyle="--", linewidth=1, label=f"hop {budget:.0f} ms")
    ax.axvline(np.median(times), color="tab:red", linewidth=1, label=f"median {np.median(times):.2f} ms")
    ax.set_xlabel("processing time per frame [ms]")
    ax.set_ylabel("frames")
    ax.set_title(f"RTF {result['rtf']:.3f}", fontsize=9)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _db(spec) -> np.ndarray:
    return 20.0 * np.log10(np.hypot(spec.real, spec.imag) + 1e-8)


def enhance_figure(noisy, enhanced, mask: np.ndarray, path, hop_s: float = 0.016) -> None:
    """Noisy and enhanced log spectrograms plus the intermediate mask."""
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 6.5), sharex=True)
    extent = [0.0, noisy.num_frames * hop_s, 0.0, 8.0]
    noisy_db = _db(noisy)
    vmax = float(noisy_db.max())
    for ax, data, title, kw in (
        (axes[0], noisy_db, "noisy", {"vmin": vmax - 80, "vmax": vmax}),
        (axes[1], _db(enhanced), "enhanced", {"vmin": vmax - 80, "vmax": vmax}),
        (axes[2], mask, "stage-1 magnitude mask", {"vmin": 0.0, "vmax": 1.0}),
    ):
        im = ax.imshow(data.T, origin="lower", aspect="auto", extent=extent, cmap="magma", **kw)
        ax.set_title(title, fontsize=9)
        ax.set_ylabel("kHz")
        fig.colorbar(im, ax=ax)
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
