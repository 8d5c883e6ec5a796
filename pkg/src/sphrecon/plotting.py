"""Optional line plots of CLI outputs (no sky maps); requires matplotlib."""


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_conditioning(rows, path):
    """Semilog plot of sigma_min, sigma_max and condition number against m."""
    plt = _pyplot()
    m = [r[0] for r in rows]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax0.semilogy(m, [r[1] for r in rows], label="sigma_max")
    ax0.semilogy(m, [r[2] for r in rows], label="sigma_min")
    ax0.set_xlabel("m")
    ax0.legend()
    ax1.semilogy(m, [r[3] for r in rows])
    ax1.set_xlabel("m")
    ax1.set_ylabel("condition number")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_error_profiles(latitudes, profiles, path):
    """RMS error per latitude ring, one curve per labelled run."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, values in profiles:
        ax.semilogy(latitudes, values, label=label)
    ax.set_xlabel("latitude [deg]")
    ax.set_ylabel("ring RMS error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
