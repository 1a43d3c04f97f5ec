"""
Emulating a target restitution
==============================

Pick the virtual damping that makes the delayed loop reproduce a bounce
with restitution 0.75, first without delay, then with 16 ms of delay.
The delay adds energy, so more damping is needed to reach the same target.
"""

from delaydock.emulation import solve_virtual_damping

for h in (0.0, 0.016):
    res = solve_virtual_damping(0.75, 63.2, 1000.0, h)
    print(f"h = {1e3 * h:4.1f} ms: b* = {res.b_star:.2f} N s/m after {len(res.evaluations)} simulations")
    print(res.comparison_csv())
