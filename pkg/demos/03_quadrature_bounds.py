"""Gauss-Radau bounds on the logarithm and the resulting sandwich around S(A|B)."""

import numpy as np

from cvnecert.quantum import cvne_exact, random_state
from cvnecert.relent import CvneApproxConfig, cvne_approx, gauss_radau, scalar_log_bound

for endpoint in (0, 1):
    r = gauss_radau(3, endpoint)
    print(f"3-point rule pinned at {endpoint}: nodes {np.round(r.nodes, 6)} weights {np.round(r.weights, 6)}")

# scalar bounds tighten quickly with the number of square-root steps k
x = 0.2
for k in range(5):
    lo = scalar_log_bound(x, CvneApproxConfig(3, k, -1))
    hi = scalar_log_bound(x, CvneApproxConfig(3, k, +1))
    print(f"k={k}: {lo:.8f} <= ln(0.2) = {np.log(x):.8f} <= {hi:.8f}")

# the same rule applied to the matrix relative entropy gives S_apx(-1) <= S(A|B) <= S_apx(+1)
rng = np.random.default_rng(11)
gaps = []
for _ in range(20):
    st = random_state(2, 2, rng)
    lo, ex, hi = (cvne_approx(st, CvneApproxConfig(apx=-1)), cvne_exact(st),
                  cvne_approx(st, CvneApproxConfig(apx=+1)))
    assert lo <= ex <= hi
    gaps.append(hi - lo)
print(f"20 random two-qubit states, m = k = 3: max gap {max(gaps):.2e}")
