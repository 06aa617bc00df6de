"""Walk through one crossing interval.

Site n and its partner -n-l become degenerate at t = l/2.  The isolated
two-level problem is integrated across the whole crossing and compared with
the first-order magnitude |Vhat(2n+l)| / sqrt(2(2n+l)) and with the exact
Landau-Zener value; the window I_l alone gives a truncated Fresnel integral
and overshoots.

    python demos/01_crossings.py
"""

from starkwannier import CrossingEvent, FourierPotential, crossing_schedule, stationary_phase_amplitude
from starkwannier import landau_zener_amplitude, two_level_oracle
from starkwannier.crossing import landau_zener_exact

pot = FourierPotential.cosine({m: 2.0 ** (1 - m) for m in range(1, 7)})
print("crossings of site 1 up to t = 2 for V = sum_m 2^(1-m) cos(m x), m <= 6:")
for ev in crossing_schedule(1, 2.0, pot):
    print(f"  l={ev.l}  t*={ev.t_star:.1f}  pair={ev.pair}  |coupling|={abs(ev.coupling):.3f}")

print("\n2n+l   first order   window I_l   full crossing   Landau-Zener")
for a in (16, 24, 32, 48):
    ev = CrossingEvent.build(a // 2, 0, FourierPotential.from_positive({a: 0.05}))
    print(
        f"{a:4d}   {stationary_phase_amplitude(ev):.6f}      {abs(two_level_oracle(ev)):.6f}     "
        f"{abs(landau_zener_amplitude(ev)):.6f}        {landau_zener_exact(ev):.6f}"
    )
