#!/usr/bin/env python
# coding: utf-8

# # Optimizing the kernel
#
# Four optimizers share a single convention: they minimize, so kernel-target
# alignment enters as its negative.

# In[1]:


import numpy as np

from qkflow import build_feature_map
from qkflow.data import generate
from qkflow.featuremaps import default_generators, genome_to_feature_map
from qkflow.optimize import KernelObjective, adam_train, anneal_structure, genetic_structure, grid_search_bandwidth


# In[2]:


ds = generate("circles", 16, 2, 0.05, seed=0)
objective = KernelObjective(ds.X, ds.y)

fm = build_feature_map("zz", 2, 2)
beta, trace = grid_search_bandwidth(fm, [0.1, 0.25, 0.5, 1.0, 2.0, 4.0], objective)
for entry in trace.iterations:
    print(f"beta {entry['candidate']['beta']:4.2f}  alignment {-entry['value']:.4f}")
print("best bandwidth:", beta)


# ## Gradient training
#
# The hardware-efficient map interleaves data re-uploading with trainable
# rotations. With a single layer the trainable block comes after all the
# encoding, so it cancels inside |<phi(x')|phi(x)>|^2 and the gradient is
# exactly zero. Two layers are the smallest useful depth.

# In[3]:


fm = build_feature_map("hardware_efficient_trainable", 2, 2, layers=2)
theta0 = np.random.default_rng(0).uniform(-np.pi, np.pi, fm.num_params)
theta, trace = adam_train(fm, theta0, objective, steps=30, lr=0.1)
print(f"alignment {-trace.iterations[0]['value']:.4f} -> {-trace.best['value']:.4f}")


# ## Structure search
#
# Instead of tuning angles we can choose which Pauli generator (and which
# feature) drives each rotation slot.

# In[4]:


generators = default_generators(2)
print(len(generators), "generators:", ", ".join(generators))
genome, trace = anneal_structure(generators, 3, 2, objective, seed=1)
print("annealing:", genome.fingerprint, f"alignment {-trace.best['value']:.4f}")
genome, trace = genetic_structure(generators, 3, 2, objective, population=10, generations=15, seed=1)
print("genetic:  ", genome.fingerprint, f"alignment {-trace.best['value']:.4f}")
print(genome_to_feature_map(genome, generators, 2, 2).to_json()[:200], "...")
