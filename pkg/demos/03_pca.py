"""Principal components from a self-written Jacobi eigensolver.

With fewer samples than grid values the basis comes from the small N x N
Gram matrix; otherwise from the D x D covariance. Both routes agree.
"""
import numpy as np

from cascadenet import pca
from cascadenet.dataset import GeneratorConfig, generate, remove_flat_means

rng = np.random.default_rng(3)
x = rng.standard_normal((50, 20)) @ np.diag(np.linspace(3, 0.5, 20))
gram = pca.fit(x, 5, method="gram")
cov = pca.fit(x, 5, method="covariance")
signs = np.sign(np.sum(gram.components * cov.components, axis=0))
print("Gram vs covariance route, largest component difference:", np.abs(gram.components - cov.components * signs).max())
print("variances:", np.round(gram.variances, 3))

# The generator's data: the leading components carry the time signal and model offsets.
data = generate(GeneratorConfig())
centred = remove_flat_means(data.X, data.height, data.width)
model = pca.fit(centred[::2], 12)
total = np.sum(np.var(centred[::2], axis=0, ddof=1))
share = np.cumsum(model.variances) / total
for k in (1, 2, 6, 12):
    print(f"first {k:2d} components explain {share[k - 1]:.1%} of the variance")
