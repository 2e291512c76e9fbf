#!/usr/bin/env python
# coding: utf-8

# # The command-line pipeline
#
# The five subcommands talk to each other only through files in a workspace
# directory. This script drives them through `qkflow.cli.main`, which is what
# the `qkflow` console script calls, and compares three kernels with error
# bars from three seeds each.

# In[1]:


import json
import sys
import tempfile
from pathlib import Path

from qkflow.cli import main


# In[2]:


ws = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="qkflow-"))


def qkflow(*argv):
    rc = main([argv[0], "--workspace", str(ws), *argv[1:]])
    if rc != 0:
        raise SystemExit(f"qkflow {argv[0]} failed with exit code {rc}")


grams = []
for seed in (1, 2, 3):
    qkflow("get-dataset", "--kind", "circles", "--n", "40", "--noise", "0.05", "--seed", str(seed), "--out", f"data{seed}")
    qkflow("preprocess", "--input", f"data{seed}", "--scale", "minmax", "--stratified", "--seed", str(seed), "--out", f"split{seed}")
    qkflow("apply-kernel", "--input", f"split{seed}", "--kernel", "fidelity", "--map", "zz", "--bandwidth", "1.5", "--out", f"zz{seed}")
    qkflow("apply-kernel", "--input", f"split{seed}", "--kernel", "fidelity", "--map", "angle", "--out", f"angle{seed}")
    qkflow("apply-kernel", "--input", f"split{seed}", "--kernel", "rbf", "--alpha", "2", "--out", f"rbf{seed}")
    grams += ["--gram", f"zz={ws / f'zz{seed}'}", "--gram", f"angle={ws / f'angle{seed}'}", "--gram", f"rbf={ws / f'rbf{seed}'}"]

qkflow("evaluate", *grams, "--metric", "accuracy,alignment", "--title", "circles, 3 seeds")


# In[3]:


for line in (ws / "results" / "results.jsonl").read_text().splitlines():
    rec = json.loads(line)
    if rec["metric_name"] == "test_accuracy":
        print(f"{rec['label']:6s} {rec['meta']['source'].rsplit('/', 1)[-1]:7s} test accuracy {rec['value']:.3f}")
print("plot written to", ws / "results" / "plot.svg")
