"""Optional SVG figures for ``tail`` runs. Needs matplotlib."""

from __future__ import annotations

from pathlib import Path


def tail_figures(out: Path, tails, pmfs) -> list[Path]:
    """One SVG per horizon: smoothed pmf of the regret (left), tail (right)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "bandit-tails"
    ns = sorted({n for _, n, _ in tails} | {n for _, n, _ in pmfs})
    paths = []
    for n in ns:
        fig, (ax_p, ax_t) = plt.subplots(1, 2, figsize=(10, 4))
        for ss, m, pm in pmfs:
            if m != n:
                continue
            if pm.is_spike:
                ax_p.axvline(pm.spike, label=f"{ss.policy} (constant)", linestyle="--")
            else:
                ax_p.plot(pm.grid, pm.density, label=ss.policy)
        for ss, m, tc in tails:
            if m == n:
                ax_t.step(tc.thresholds, tc.p_hat, where="post", label=ss.policy)
        ax_p.set_xlabel("regret")
        ax_p.set_ylabel("smoothed pmf")
        ax_t.set_xlabel("x")
        ax_t.set_ylabel("P(regret >= x)")
        ax_t.set_yscale("log")
        for ax in (ax_p, ax_t):
            ax.legend(fontsize="small")
        fig.suptitle(f"n = {n}")
        fig.tight_layout()
        path = out / f"tail_n{n}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
