"""Conditional entropy of bipartite states and the linear witness that certifies it."""

import numpy as np

from cvnecert.quantum import cvne_exact, noisy_max_entangled, random_state, werner_cvne, werner_state
from cvnecert.witness import cvne_witness, regularized_witness

rng = np.random.default_rng(7)

# S(A|B) in bits: +1 for a maximally mixed pair, -1 for a maximally entangled pair
for v in (0.0, 0.5, 0.8, 1.0):
    print(f"isotropic qubits v={v:.1f}: S(A|B) = {cvne_exact(noisy_max_entangled(v, 2)):+.6f}")

# Werner family turns negative just above p = 0.747614
for p in (0.74, 0.747614, 0.75):
    print(f"werner p={p}: closed form {werner_cvne(p):+.2e}, matrix {cvne_exact(werner_state(p)):+.2e}")

# the witness reproduces S(A|B) on its own state and lower-bounds it elsewhere (concavity)
rho = random_state(2, 2, rng)
w = cvne_witness(rho)
print("Tr(W rho) - S(A|B)[rho] =", w.value(rho) - cvne_exact(rho))
for _ in range(3):
    sigma = random_state(2, 2, rng)
    print(f"  Tr(W sigma) = {w.value(sigma):+.4f} >= S(A|B)[sigma] = {cvne_exact(sigma):+.4f}")

# a nearly pure state is mixed with noise until its entropy reaches the requested level
pure = noisy_max_entangled(1.0, 2)
wr = regularized_witness(pure, -0.9)
print("regularised witness built for H = -0.9, mixing c =", wr.mixing_c, "-> S(A|B) =", cvne_exact(wr.support_state))
