"""The Bell expression catalogue: coefficients, bounds, and the operator at the optimal angles."""

import numpy as np

from cvnecert import bell
from cvnecert.certify import SeesawConfig, tsirelson_check
from cvnecert.quantum import noisy_max_entangled

for name in bell.BUILTIN_NAMES:
    spec = bell.builtin_spec(name)
    alice, bob = spec.optimal_povms()
    op = bell.bell_operator_matrix(spec, alice, bob)
    top = np.linalg.eigvalsh(op)[-1]
    print(f"{name:6s} {spec.m_A}x{spec.m_B}  beta_C = {spec.local_bound:.4f}  T = {spec.tsirelson_bound:.6f}"
          f"  max eig = {top:.6f}")

# isotropic noise scales the Bell value linearly: value(v) = v * T
spec = bell.builtin_spec("CHSH")
alice, bob = spec.optimal_povms()
for v in (0.6, 0.7071, 0.9, 1.0):
    val = bell.bell_value(noisy_max_entangled(v, 2), spec, alice, bob)
    print(f"CHSH at visibility {v}: {val:.4f}  ratio {bell.violation_ratio(val, spec):.4f}")

# the I_delta family has no tabulated angles; its maximum comes from the see-saw
for delta in (np.pi / 12, np.pi / 6):
    s = bell.idelta_spec(delta)
    print(f"I_delta({delta:.4f}): beta_C = {s.local_bound:.4f}  T = {s.tsirelson_bound:.6f}"
          f"  see-saw = {tsirelson_check(s, SeesawConfig(restarts=3)):.6f}")

# specs round-trip through a plain key = value text form
print(bell.builtin_spec("MCHSH").to_keyvalue())
