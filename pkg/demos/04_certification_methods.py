"""The three certification methods: omega_H, the largest Bell value compatible with S(A|B) >= H."""

import time

import numpy as np

from cvnecert import bell
from cvnecert.certify import (SeesawConfig, entropy_bound_at, invert_curve, method1_witness_iteration,
                              method2_fixed_measurements, method3_seesaw)
from cvnecert.relent import CvneApproxConfig

spec = bell.builtin_spec("CHSH")
for H in (0.0, -0.5, -0.9):
    t = time.time()
    r1 = method1_witness_iteration(spec, H)
    r2 = method2_fixed_measurements(spec, H)
    r3 = method3_seesaw(spec, H, ss=SeesawConfig(restarts=2))
    print(f"CHSH H={H:+.1f}: method 1 {r1.omega:.5f} ({r1.iterations} it), method 2 {r2.omega:.5f},"
          f" method 3 {r3.omega:.5f}  [{time.time() - t:.0f}s]")

# fixed Tsirelson-optimal measurements are not optimal once the entropy is constrained
spec = bell.builtin_spec("MCHSH")
r2 = method2_fixed_measurements(spec, 0.0)
r3 = method3_seesaw(spec, 0.0, ss=SeesawConfig(restarts=3))
print(f"MCHSH H=0: fixed measurements {r2.omega:.4f}, see-saw {r3.omega:.4f}")

# inverse direction: the weakest entropy bound implied by an observed CHSH value
cfg = CvneApproxConfig(apx=1)
for value in (2.2, 2.5, 2 * np.sqrt(2)):
    print(f"CHSH value {value:.4f} certifies S(A|B) <= {entropy_bound_at(bell.builtin_spec('CHSH'), value, cfg):+.4f}")

# the same from a sampled omega(H) curve
hs = np.linspace(0, -1, 6)
om = [method2_fixed_measurements(bell.builtin_spec("CHSH"), h).omega for h in hs]
print("from a 6-point curve, CHSH 2.5 ->", round(invert_curve(hs, om, 2.5, 2), 4))
