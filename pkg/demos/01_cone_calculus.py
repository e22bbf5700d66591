"""Cone projection calculus walkthrough.

Projections onto a cone, its dual, and its polar reflection, plus the
identities that make multiplier methods tick: the Moreau decomposition and
the distance-gradient formula.
"""

import numpy as np

from simalm import NonnegativeOrthant, ProductCone, SecondOrderCone, ZeroCone

rng = np.random.default_rng(0)

orthant = NonnegativeOrthant(4)
y = rng.standard_normal(4) * 2
print("y            =", np.round(y, 3))
print("proj_K(y)    =", np.round(orthant.project(y), 3))
print("proj_-K(y)   =", np.round(orthant.project_neg(y), 3))
print("proj_K*(y)   =", np.round(orthant.project_dual(y), 3))

# Moreau: any vector splits orthogonally into its -K and K* parts
neg, dual = orthant.project_neg(y), orthant.project_dual(y)
print("\nMoreau residual ||neg + dual - y|| =", np.linalg.norm(neg + dual - y))
print("orthogonality  <neg, dual>         =", float(neg @ dual))

# second-order cone: the three-case closed form in action
soc = SecondOrderCone(3)
for point in ([2.0, 1.0, 0.5],    # inside: fixed
              [-3.0, 1.0, 0.0],   # inside the polar: maps to the origin
              [0.0, -1.0, 1.0]):  # in between: scaled onto the boundary
    p = soc.project(np.array(point))
    print(f"soc.project({point}) = {np.round(p, 4)}")

# products operate blockwise; distances to -K drive penalty terms
cone = ProductCone([ZeroCone(2), NonnegativeOrthant(2), SecondOrderCone(3)])
z = rng.standard_normal(cone.dim)
print("\nproduct cone dim", cone.dim)
print("dist_-K(z)      =", float(cone.dist_neg(z)))
print("grad d^2_-K(z)  =", np.round(cone.dist_neg_sq_grad(z), 3))

# the gradient is 2 (z - proj_-K(z)): check by finite differences
h = 1e-6
fd = np.zeros(cone.dim)
for i in range(cone.dim):
    e = np.zeros(cone.dim)
    e[i] = h
    fd[i] = (cone.dist_neg(z + e) ** 2 - cone.dist_neg(z - e) ** 2) / (2 * h)
print("finite-difference deviation:", np.linalg.norm(fd - cone.dist_neg_sq_grad(z)))
