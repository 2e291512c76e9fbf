#!/usr/bin/env python
# coding: utf-8

# # Fidelity kernels and bandwidth
#
# A feature map loads a point x into a state |phi(x)>, and the fidelity kernel
# is the squared overlap of two such states. For a single qubit with an RY
# rotation the kernel has a closed form, which makes it a good place to start.

# In[1]:


import numpy as np

from qkflow import KernelSpec, build_feature_map, gram
from qkflow.metrics import approximate_dimension, geometric_difference


# In[2]:


xs = np.linspace(-np.pi, np.pi, 7)
fm = build_feature_map("angle", 1, 1)
K = gram(KernelSpec("fidelity", feature_map=fm), xs[:, None]).entries
closed_form = np.cos((xs[:, None] - xs[None, :]) / 2) ** 2
print("max |K - cos^2| =", np.abs(K - closed_form).max())


# The bandwidth beta multiplies every data-dependent angle. Small beta keeps all
# encoded states near |0...0>, so the Gram matrix drifts toward the all-ones
# matrix; large beta pushes the states apart and the Gram matrix toward the
# identity. The approximate dimension d tracks this.

# In[3]:


rng = np.random.default_rng(0)
X = rng.uniform(-1, 1, (24, 4))
rbf = gram(KernelSpec("rbf", alpha=1.0), X).entries
print(" beta      d      g(rbf, q)")
for beta in (0.05, 0.25, 0.5, 1.0, 2.0, 4.0):
    fm = build_feature_map("zz", 4, 4, bandwidth=beta)
    Kq = gram(KernelSpec("fidelity", feature_map=fm), X).entries
    print(f"{beta:5.2f}  {approximate_dimension(Kq):6.2f}  {geometric_difference(rbf, Kq):8.3f}")
print("sqrt(N) =", np.sqrt(len(X)))


# With g well below sqrt(N) a classical kernel can match the quantum one on any
# labels, so a useful bandwidth sits in the narrow band where d is moderate and
# g is large.
