"""Window norms of a high-momentum state on a geometric time grid.

A state placed at site n on every fiber keeps almost all of its mass in the
moving window when n is large: it is accelerated rather than trapped.  The
decay verdict printed here is the finite-horizon heuristic of
``bound_state_probe``.

    python demos/03_window_probe.py
"""

from starkwannier import ExperimentSpec, FourierPotential, bound_state_probe
from starkwannier.experiments import window_ensemble

pot = FourierPotential.cosine({1: 2.0})
for lam, n in ((1.5, 1), (1.5, 16)):
    spec = ExperimentSpec("probe", pot, lam=lam, n_list=(n,), t_max=8.0, k_grid=5)
    N = spec.config_for(n).N
    res = bound_state_probe(window_ensemble(n, N, spec.k_grid), spec)[n]
    print(f"lambda={lam}, n={n}")
    for t, v in zip(res.times, res.values):
        print(f"    t={t:6.3f}  window norm {v:.4f}")
    print(f"    decaying={res.decaying}")
