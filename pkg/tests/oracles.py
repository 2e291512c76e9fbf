"""Independent reference computations shared by the test modules."""
import itertools

import numpy as np


def dual_grid_search(K, y, C, points=201, rounds=3):
    """Maximize the SVM dual by exhaustive search over a refined grid.

    The equality constraint ``sum(a * y) = 0`` eliminates the last
    multiplier; the remaining ones are gridded over ``[0, C]`` and the grid
    is re-centred on the incumbent each round.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    N = len(y)
    lo = np.zeros(N - 1)
    hi = np.full(N - 1, float(C))
    best_val, best_alpha = 0.0, np.zeros(N)
    for _ in range(rounds):
        axes = [np.linspace(l, h, points) for l, h in zip(lo, hi)]
        grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(N - 1, -1).T
        last = -y[-1] * (grid @ y[:-1])
        feasible = (last >= -1e-12) & (last <= C + 1e-12)
        alphas = np.column_stack([grid, np.clip(last, 0, C)])[feasible]
        ay = alphas * y
        values = alphas.sum(axis=1) - 0.5 * np.einsum("ki,ij,kj->k", ay, K, ay)
        k = int(np.argmax(values))
        if values[k] > best_val:
            best_val, best_alpha = float(values[k]), alphas[k]
        step = (hi - lo) / (points - 1)
        lo = np.maximum(best_alpha[:-1] - 2 * step, 0.0)
        hi = np.minimum(best_alpha[:-1] + 2 * step, C)
    return best_val, best_alpha


def all_labelings(N):
    return [np.array(s, dtype=float) for s in itertools.product((-1, 1), repeat=N)]
