#!/usr/bin/env python
# coding: utf-8

# # Overlap test versus SWAP test
#
# On hardware the fidelity is estimated from measurement counts. The overlap
# test runs U(x')^dagger U(x) and counts the all-zeros outcome, so its estimate
# has variance F(1 - F)/shots. The SWAP test reads an ancilla whose zero
# probability is (1 + F)/2, which gives variance (1 - F^2)/shots after
# rescaling. The gap is largest for small F.

# In[1]:


import numpy as np

from qkflow import KernelSpec, build_feature_map, gram, psd_clip
from qkflow.kernels import fidelity_exact, overlap_test, swap_test


# In[2]:


fm = build_feature_map("angle", 1, 1)
print("   F   shots  sd(overlap)  sd(swap)")
for F in (0.1, 0.5, 0.9):
    x, x2 = np.array([2 * np.arccos(np.sqrt(F))]), np.zeros(1)
    for shots in (64, 1024):
        ov = [overlap_test(fm, x, x2, shots=shots, seed=s) for s in range(300)]
        sw = [swap_test(fm, x, x2, shots=shots, seed=s) for s in range(300)]
        print(f"{fidelity_exact(fm, x, x2):4.1f}  {shots:5d}  {np.std(ov):10.4f}  {np.std(sw):8.4f}")


# Shot noise can make a Gram matrix indefinite. psd_clip projects it back onto
# the PSD cone by clamping negative eigenvalues, which is what the SVM needs.

# In[3]:


X = np.random.default_rng(1).uniform(-1, 1, (20, 3))
fm = build_feature_map("zz", 3, 3)
noisy = gram(KernelSpec("fidelity", mode="swap", shots=128, seed=0, feature_map=fm), X).entries
print("min eigenvalue before clipping:", np.linalg.eigvalsh(noisy)[0])
print("min eigenvalue after clipping: ", np.linalg.eigvalsh(psd_clip(noisy))[0])
