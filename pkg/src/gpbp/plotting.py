"""Figure rendering for experiment reports.

All functions draw onto a fresh figure and write it to the given path
(the suffix picks the format; reports use SVG next to the CSV files).
The Agg backend is forced so rendering works headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_trace_curves(path, curves, xlabel="sweep", ylabel="value",
                      logy=True, title=None):
    """Line plot of per-sweep series.

    Parameters
    ----------
    curves : dict
        label -> (x values, y values); None y entries are skipped.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, (xs, ys) in curves.items():
        pairs = [(x, y) for x, y in zip(xs, ys) if y is not None]
        if not pairs:
            continue
        ax.plot([p[0] for p in pairs], [p[1] for p in pairs],
                label=label, linewidth=1.2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_errorbars(path, series, xlabel, ylabel, logy=False, title=None):
    """Error-bar plot of grouped summary values.

    Parameters
    ----------
    series : dict
        label -> (x values, means, stderrs); stderrs may contain nan
        (plotted without a bar).
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, (xs, means, errs) in series.items():
        safe = [0.0 if e != e else e for e in errs]
        ax.errorbar(xs, means, yerr=safe, label=label, marker="o",
                    capsize=3, linewidth=1.2, markersize=4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_heatmap(path, x_values, y_values, grid, xlabel, ylabel,
                 value_label=None, title=None):
    """Heatmap of a value over a 2-D parameter grid.

    grid[j][i] is the value at (x_values[i], y_values[j]).
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=None, interpolation="nearest")
    ax.set_xticks(range(len(x_values)))
    ax.set_xticklabels([f"{v:g}" for v in x_values], fontsize=8)
    ax.set_yticks(range(len(y_values)))
    ax.set_yticklabels([f"{v:g}" for v in y_values], fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    cbar = fig.colorbar(im, ax=ax)
    if value_label:
        cbar.set_label(value_label)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
