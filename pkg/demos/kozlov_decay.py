"""
How fast does the image potential decay?
========================================

Read an interval potential off the image measure's conditionals and watch
its size shrink with the interval's diameter.  Exponential interactions give
an exponential tail; a power-law interaction gives a power-law tail.
"""

from gibbs1d.errors import FitDegenerateError
from gibbs1d.kozlov import decay_scan, fit_decay
from gibbs1d.lattice import ising_alphabet
from gibbs1d.potential import exponential_ising, long_range_ising, truncation
from gibbs1d.transform import flip_kernel

A = ising_alphabet()
noise = flip_kernel(A, 0.1)


def show(title, pot, trunc, model):
    scan = decay_scan(pot, noise, 6, 6, trunc)
    print(title)
    for p in scan:
        print(f"  d={p.diameter}  sup|U|={p.sup_abs_U:.3e}  window delta={p.window_delta:.1e}")
    try:
        fit = fit_decay(scan, model)
        print(f"  {model} fit: {fit.rate:.3f} (residual {fit.residual:.3f}, d={list(fit.diameters)})")
    except FitDegenerateError as e:
        print(f"  no fit: {e}")
    loose = fit_decay(scan, model, max_rel_delta=float("inf"))
    print(f"  ignoring window convergence: {loose.rate:.3f}")


pot = exponential_ising(1.0, 1.0)
show("exponential pair, J=1, rate 1", pot, truncation(pot, 30), "exponential")

# the n=6 window is too small to converge at J=1; a weaker chain converges
for J in (1.0, 0.8):
    pot = long_range_ising(4.0, J)
    show(f"power law 1/d^4, J={J}", pot, truncation(pot, 60), "power-law")
