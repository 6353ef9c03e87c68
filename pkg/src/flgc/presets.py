"""Default search grids and tuned settings for the bundled datasets.

The classification grid covers alpha in [0, 1] and K in [0, 20] with lambda
log-spaced over [2^-16, 2^8]; with min-max scaled features and five or so
labels per class the validation optimum usually sits below 2^-8, near 1e-4.
The clustering grid uses lambda in [1, 1e4] and K in [1, 20].

``CLUSTER_PRESETS`` hold the cells picked by ``flgc --task cluster`` with
the clustering grid below (selection by ACC against the reference labels,
then NMI, then fewer steps / larger lambda / smaller alpha).
"""

CLASSIFY_LAMBDAS = tuple(2.0 ** e for e in range(-16, 9))
CLASSIFY_ALPHAS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)
CLASSIFY_STEPS = tuple(range(0, 21))

CLUSTER_LAMBDAS = (1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0)
CLUSTER_ALPHAS = (0.0, 0.01, 0.03, 0.1, 0.3, 1.0)
CLUSTER_STEPS = tuple(range(1, 21))

NOISE_INTENSITIES = (0.01, 0.05, 0.1, 0.2)

CLUSTER_PRESETS = {
    "iris": {"scale": "none", "knn": "auto", "lam": 30.0, "alpha": 0.0, "steps": 7},
    "wine": {"scale": "minmax", "knn": "auto", "lam": 3.0, "alpha": 0.3, "steps": 2},
}
