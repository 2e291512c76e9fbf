#!/usr/bin/env python
# coding: utf-8

# # Kernel machines on precomputed Gram matrices
#
# Every learner here consumes a Gram matrix and nothing else, so a quantum
# kernel and a classical one are interchangeable.

# In[1]:


import numpy as np

from qkflow import KernelSpec, build_feature_map, gram
from qkflow.data import generate, scale_features, split
from qkflow.kernelmachines import kpca_fit, kpca_project, krr_predict, krr_train, svm_predict, svm_train
from qkflow.metrics import accuracy, model_complexity, target_alignment


# In[2]:


ds = generate("circles", 60, 2, 0.05, seed=3)
parts = split(ds, 0.7, seed=3, stratified=True)
train, scaler = scale_features(parts.train, "minmax", -1.0, 1.0)
X_test = scaler.apply(parts.test.X)

specs = {
    "linear": KernelSpec("linear"),
    "rbf": KernelSpec("rbf", alpha=2.0),
    "fidelity": KernelSpec("fidelity", feature_map=build_feature_map("zz", 2, 2, bandwidth=1.5)),
}
for name, spec in specs.items():
    K = gram(spec, train.X).entries
    K_test = gram(spec, X_test, train.X).entries
    model = svm_train(K, train.y, C=10.0)
    pred, _ = svm_predict(model, K_test)
    print(f"{name:9s} test acc {accuracy(parts.test.y, pred):.2f}  "
          f"alignment {target_alignment(K, train.y):.3f}  "
          f"s {model_complexity(K, train.y):9.2f}  support vectors {len(model.support_indices)}")


# Kernel ridge regression and kernel PCA use the same matrices. Here KRR fits
# the +-1 labels as a regression target, and KPCA shows how much variance the
# leading directions of the quantum feature space capture.

# In[3]:


K = gram(specs["fidelity"], train.X).entries
krr = krr_train(K, train.y, ridge=1e-2)
K_test = gram(specs["fidelity"], X_test, train.X).entries
print("KRR sign accuracy:", accuracy(parts.test.y, np.where(krr_predict(krr, K_test) >= 0, 1.0, -1.0)))

kpca = kpca_fit(K, 5)
print("KPCA eigenvalues:", np.round(kpca.eigenvalues, 3))
print("projected shape:", kpca_project(kpca, K_test).shape)
