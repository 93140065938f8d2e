"""Uncertainty propagation through batched evolution.

Draws a random diffusion-direction parameter, runs all realizations through
the Crank-Nicolson stepper at once, and prints global statistics of the
prediction against the exact solutions.
"""

from evokernel import evolution as ev

domain = ev.SquareLatticeDomain(n=41, n_bd=64)
backend = ev.ClassicalBackend(domain)

stats, hist = ev.uq_run(backend, m_samples=2000, seed=7, tau=0.1, n_steps=10)
for key in ("mean_exact", "mean_pred", "std_exact", "std_pred",
            "max_abs_error", "rel_l2_error", "q95_abs_error"):
    print(f"{key:>15}: {stats[key]: .6f}")
print("probe-point histogram bins: a in "
      f"[{hist['a'].min():.3f}, {hist['a'].max():.3f}]")
