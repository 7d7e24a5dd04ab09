"""Run all three trackers through the temperature and water-content steps.

The reference trackers follow the estimated V_max directly; the
conventional tracker climbs the P-V curve on measured dP/dV alone and
keeps dithering once sensor noise hides the slope.
"""

from fcmppt.anfis import anfis_train
from fcmppt.fuelcell import StackParams
from fcmppt.ica import IcaConfig, ica_train
from fcmppt.oracle import generate_dataset, training_grid
from fcmppt.simulation import (METHOD_LABELS, evaluate_trace, run_scenario,
                               temperature_step_scenario, water_step_scenario)

stack = StackParams()
train = generate_dataset(stack, *training_grid())
x, y = train.normalized()
estimators = {"anfis": anfis_train(x, y, 70, norm=train.norm)[0],
              "ica-nn": ica_train(IcaConfig(), x, y, norm=train.norm).network}

for title, make in (("Temperature steps 50 -> 70 -> 60 C", temperature_step_scenario),
                    ("Water-content steps 9 -> 13 -> 11", water_step_scenario)):
    print(f"\n{title}")
    print(f"{'method':13s} {'seg':>3s} {'T_s (s)':>8s} {'acc %':>7s} {'mean P (W)':>11s}")
    for m in ("anfis", "ica-nn", "conventional"):
        for k, s in enumerate(evaluate_trace(run_scenario(make(m), stack,
                                                          estimators=estimators)), 1):
            print(f"{METHOD_LABELS[m]:13s} {k:3d} {s.settling:8.3f} {s.accuracy:7.2f} "
                  f"{s.mean_power:11.1f}")
