"""Walk through the stack model and the maximum-power oracle.

Prints the polarization curve at a few currents, then shows how the
maximum power point moves with temperature and membrane water content.
"""

import numpy as np

from fcmppt.fuelcell import StackParams, sweep
from fcmppt.oracle import find_mpp

stack = StackParams()
print(f"{stack.n_cells} cells, {stack.area_A} cm^2, i_L = {stack.i_limit} A\n")

curve = sweep(stack, 328.15, 12.0, 12)
print("55 C, lambda 12")
print(f"{'I (A)':>8} {'V (V)':>8} {'P (W)':>9}")
for i, v, p in zip(curve.current, curve.voltage, curve.power):
    print(f"{i:8.1f} {v:8.2f} {p:9.1f}")

print("\nMPP versus temperature (lambda 12)")
for t in np.arange(313.15, 344.0, 10.0):
    m = find_mpp(stack, t, 12.0)
    print(f"  {t - 273.15:4.0f} C  P_max {m.p_max:7.1f} W at V {m.v_max:6.2f} V")

print("\nMPP versus water content (55 C)")
for lam in (9.0, 11.0, 13.0, 14.0):
    m = find_mpp(stack, 328.15, lam)
    print(f"  lambda {lam:4.1f}  P_max {m.p_max:7.1f} W at V {m.v_max:6.2f} V")
