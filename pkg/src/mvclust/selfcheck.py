"""Self-contained checks of the spectral shrinkage operator.

Exposed through the ``prox-check`` CLI subcommand so an installation can be
validated without the test suite: scalar outputs are compared against a
dense-grid minimizer, and tensor outputs are checked for objective descent
and singular-value shrinkage.
"""

import numpy as np

from . import tensor


def _scalar_grid_min(s, rho, gamma, resolution=1e-4):
    grid = np.arange(0.0, max(1.5 * s, 1.0) + resolution, resolution)
    obj = 0.5 * (s - grid) ** 2 + rho * (1.0 + gamma) * grid / (gamma + grid)
    return grid[obj.argmin()]


def _objective(f, t, rho, gamma):
    return 0.5 * float(((f - t) ** 2).sum()) + rho * tensor.t_gamma_norm(t, gamma)


def scalar_suite(trials=100, seed=0, resolution=1e-4):
    """Compare scalar shrinkage against grid minimization; returns failures."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    for _ in range(trials):
        s = float(rng.uniform(0.0, 5.0))
        rho = float(rng.uniform(0.05, 2.0))
        gamma = float(rng.uniform(0.01, 5.0))
        ours = float(tensor.t_gamma_prox(np.full((1, 1, 1), s), rho, gamma)[0, 0, 0])
        ref = _scalar_grid_min(s, rho, gamma, resolution)
        err = abs(ours - ref)
        worst = max(worst, err)
        if err > 2.0 * resolution:
            failures += 1
    return failures, worst


def tensor_suite(trials=25, seed=1):
    """Objective descent and monotone shrinkage on random tensors."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        dims = tuple(rng.integers(1, 7, size=3))
        f = rng.normal(size=dims)
        rho = float(rng.uniform(0.01, 1.0))
        gamma = float(rng.uniform(0.05, 2.0))
        out = tensor.t_gamma_prox(f, rho, gamma)
        if _objective(f, out, rho, gamma) > _objective(f, f, rho, gamma) + 1e-9:
            failures += 1
            continue
        if np.any(
            tensor.fourier_singular_values(out)
            > tensor.fourier_singular_values(f) + 1e-8
        ):
            failures += 1
    return failures


def run_all(trials=100, seed=0, printer=print):
    """Run both suites, print one line per check, return True iff all pass."""
    scalar_failures, worst = scalar_suite(trials=trials, seed=seed)
    ok = scalar_failures == 0
    printer(
        "%s scalar shrinkage vs grid oracle (%d trials, worst error %.2e)"
        % ("PASS" if ok else "FAIL", trials, worst)
    )
    tensor_failures = tensor_suite(seed=seed + 1)
    tensor_ok = tensor_failures == 0
    printer(
        "%s tensor shrinkage descent and monotonicity (%d failures)"
        % ("PASS" if tensor_ok else "FAIL", tensor_failures)
    )
    return ok and tensor_ok
