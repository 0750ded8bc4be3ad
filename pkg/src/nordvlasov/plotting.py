"""Post-hoc figures written next to the CSV outputs (Agg backend, no display)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def diagnostics_figure(diag, path):
    """Four panels: energy, energy residual, support radii and sup f / drift."""
    t = np.asarray(diag["t"])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
        E = np.asarray(diag["total_energy"])
        ax[0, 0].plot(t, E, color="C0")
        ax[0, 0].set_ylabel("total energy")
        r = np.asarray(diag["energy_residual"])
        ax[0, 1].semilogy(t, np.where(r > 0, r, np.nan), color="C1")
        ax[0, 1].set_ylabel("energy identity residual")
        ax[1, 0].plot(t, diag["P_t"], label="P(t)")
        ax[1, 0].plot(t, diag["barP_t"], "--", label="bar P(t)")
        ax[1, 0].set_ylabel("momentum support")
        ax[1, 0].legend(frameon=False)
        ax[1, 1].plot(t, diag["sup_f"], label="sup f")
        ax[1, 1].plot(t, diag["conformal_drift"], label="conformal drift")
        ax[1, 1].set_ylabel("sup f, drift")
        ax[1, 1].legend(frameon=False)
        for a in ax[1]:
            a.set_xlabel("t")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def field_figure(phi, grid, t, path):
    """Colour map of phi on the space grid at time t."""
    L = grid.half_width
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 4.2))
        vmax = float(np.max(np.abs(phi))) or 1.0
        im = ax.imshow(phi.T, origin="lower", extent=(-L, L, -L, L), cmap="RdBu_r",
                       vmin=-vmax, vmax=vmax)
        fig.colorbar(im, ax=ax, label="phi")
        ax.set_title(f"t = {t:.3g}")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.grid(False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def probe_figure(rows, path):
    """Grid against retarded phi per probe row, with the derivative mismatch."""
    ok = np.asarray(rows["status"]) == "ok"
    idx = np.arange(ok.size)[ok]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
        ax[0].plot(idx, np.asarray(rows["phi_grid"], dtype=float)[ok], "o", label="grid")
        ax[0].plot(idx, np.asarray(rows["phi_retarded"], dtype=float)[ok], "x", label="retarded")
        ax[0].set_xlabel("probe row")
        ax[0].set_ylabel("phi")
        ax[0].legend(frameon=False)
        for name in ("t", "x1", "x2"):
            rep = np.asarray(rows[f"dphi_{name}_rep"], dtype=float)[ok]
            fd = np.asarray(rows[f"dphi_{name}_fd"], dtype=float)[ok]
            ax[1].semilogy(idx, np.abs(rep - fd) + 1e-300, "o", label=f"d_{name}")
        ax[1].set_xlabel("probe row")
        ax[1].set_ylabel("|representation - difference|")
        ax[1].legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
