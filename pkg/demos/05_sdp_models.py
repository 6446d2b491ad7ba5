"""Building a conic model by hand, solving it, and writing the plain-text dump."""

import numpy as np

from cvnecert import bell, sdp
from cvnecert.quantum import BipartiteState, cvne_exact
from cvnecert.relent import CvneApproxConfig, append_cvne_constraint

spec = bell.builtin_spec("CHSH")
op = bell.bell_operator_matrix(spec, *spec.optimal_povms())

# maximise Tr(B rho) over two-qubit states whose approximate conditional entropy is at least H
p = sdp.SdpProblem("maximize")
rho = sdp.add_density_variable(p, 2, 2, real=True)
append_cvne_constraint(p, rho, 2, 2, -0.5, CvneApproxConfig(m=3, k=3, apx=1))
p.set_objective(sdp.inner(op, rho))
sol = p.solve()
state = BipartiteState(sol[rho], 2, 2)
print(f"status {sol.status}, omega = {sol.objective_value:.6f}, gap {sol.duality_gap:.1e}, "
      f"S(A|B) at optimum = {cvne_exact(state):+.5f}")

# the compiled problem can be re-solved with a new objective without recompiling
p.set_objective(sdp.inner(-op, rho))
print("minimum over the same set:", round(-p.solve().objective_value, 6))

# a tiny model shows the dump layout: header, variables, cone sizes, then sparse triplets
q = sdp.SdpProblem("maximize")
x = q.add_variable("x", 2, real=True, psd=True)
q.add_eq(x.expr.trace(), 1.0, "unit trace")
q.set_objective(sdp.inner(np.diag([1.0, 2.0]), x))
print(q.dump())
print("largest eigenvalue of diag(1, 2):", round(q.solve().objective_value, 8))
