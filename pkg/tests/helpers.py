import numpy as np

from funkmean import GroupedScores


def gaussian_scores(rng, sizes, p, means=None, covs=None):
    """Independent Gaussian score groups; defaults are zero means and identity covariances."""
    out = []
    for j, n in enumerate(sizes):
        mu = np.zeros(p) if means is None else np.asarray(means[j], float)
        L = np.eye(p) if covs is None else np.linalg.cholesky(np.asarray(covs[j], float))
        out.append(mu + rng.standard_normal((n, p)) @ L.T)
    return GroupedScores(out)


def random_spd(rng, p, spread=3.0):
    A = rng.standard_normal((p, p))
    Qm, _ = np.linalg.qr(A)
    lam = np.exp(rng.uniform(-spread / 2, spread / 2, size=p))
    return (Qm * lam) @ Qm.T
