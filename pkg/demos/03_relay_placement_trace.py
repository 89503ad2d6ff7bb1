"""One full placement run, iteration by iteration.

Solves a 16-user instance and prints the outer-loop history: the priced
bound q_U, the incumbent value q_L, the multiplier mass, and the relay's
path from the high starting point down into the street canyon and back out
of the shadows.  With matplotlib installed, saves the descent path over the
building footprints to relay_path.png.
"""

import numpy as np

from uavrelay import desk_config, generate, solve

sc = generate(desk_config(16), seed=3)
print(f"{len(sc.buildings)} buildings, {sc.num_ues} users, "
      f"area {sc.bounds.x_m:.0f} x {sc.bounds.y_m:.0f} m")

sol, trace = solve(sc)

print(f"\n{'T':>2} {'q_U [Mbit/s]':>13} {'q_L [Mbit/s]':>13} {'gap':>9} "
      f"{'sum(lambda)':>12} {'position':>26} {'inner':>5}")
for o in trace.outer:
    lam_sum = float(np.sum(o.lambdas)) if len(o.lambdas) else 0.0
    pos = f"({o.x[0]:7.1f},{o.x[1]:7.1f},{o.x[2]:6.1f})"
    print(f"{o.T:>2} {o.q_u_mbps:>13.3f} {o.q_l_mbps:>13.3f} "
          f"{o.gap_mbps:>9.4f} {lam_sum:>12.1f} {pos:>26} "
          f"{len(o.inner) - 1:>5}")

print(f"\nconverged: {sol.converged} (fallback: {sol.fallback_used})")
print(f"deployment: ({sol.position[0]:.1f}, {sol.position[1]:.1f}, "
      f"{sol.position[2]:.1f}) m")
print(f"min capacity in the actual environment: "
      f"{sol.min_capacity_bps / 1e6:.2f} Mbit/s")
print(f"line of sight to every endpoint: {sol.feasible}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 7))
    for b in sc.buildings:
        ax.add_patch(plt.Rectangle((b.xmin, b.ymin), b.length, b.width,
                                   color="0.8"))
        ax.annotate(f"{b.height:.0f} m", b.center_xy, ha="center",
                    fontsize=7, color="0.4")
    ax.scatter(sc.ues[:, 0], sc.ues[:, 1], marker="^", color="tab:green",
               label="users", zorder=3)
    ax.scatter(*sc.bs[:2], marker="s", color="black", label="BS", zorder=3)
    path = np.array([o.x for o in trace.outer])
    ax.plot(path[:, 0], path[:, 1], "o-", color="tab:red", label="relay path")
    for o in trace.outer:
        ax.annotate(f"z={o.x[2]:.0f}", o.x[:2], fontsize=7,
                    xytext=(4, 4), textcoords="offset points")
    ax.set_xlim(0, sc.bounds.x_m), ax.set_ylim(0, sc.bounds.y_m)
    ax.set_aspect("equal"), ax.legend(loc="upper right")
    ax.set_title("relay positioning across outer iterations")
    fig.savefig("relay_path.png", dpi=130)
    print("wrote relay_path.png")
except ImportError:
    print("matplotlib not available; skipping the figure")
