"""The training machinery: backpropagated gradients and scaled conjugate gradient.

The nets are tiny tanh MLPs of width 2. Their gradient is checked here
against central finite differences, then SCG is run on a least-squares fit
and compared to the closed-form solution.
"""
import numpy as np

from cascadenet.network import MlpSpec, forward, init_params, sse_and_gradient
from cascadenet.scg import ScgConfig, minimize

rng = np.random.default_rng(0)
x = rng.standard_normal((40, 3))
t = np.sin(x[:, 0]) + 0.5 * x[:, 1] ** 2

for depth in range(4):
    spec = MlpSpec(input_dim=3, hidden_layers=depth)
    w = init_params(spec, seed=1)
    _, g = sse_and_gradient(spec, w, x, t)
    h = 1e-6
    fd = np.array(
        [
            (sse_and_gradient(spec, w + h * e, x, t)[0] - sse_and_gradient(spec, w - h * e, x, t)[0]) / (2 * h)
            for e in np.eye(spec.n_params)
        ]
    )
    rel = np.max(np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1.0))
    print(f"depth {depth}: {spec.n_params:3d} parameters, worst relative gradient error {rel:.1e}")

# A linear net is least squares; SCG should land on the normal-equations solution.
spec = MlpSpec(3, 0)
res = minimize(lambda w: sse_and_gradient(spec, w, x, t), init_params(spec, 0))
design = np.column_stack([x, np.ones(len(x))])
exact = np.linalg.solve(design.T @ design, design.T @ t)
print(f"SCG: {res.iterations} iterations ({res.converged_by}), max deviation from exact {np.abs(res.params - exact).max():.1e}")

# A hidden layer buys a better fit of the nonlinear target.
spec = MlpSpec(3, 1)
res = minimize(lambda w: sse_and_gradient(spec, w, x, t), init_params(spec, 0), ScgConfig(max_iterations=500))
rmse = np.sqrt(np.mean((forward(spec, res.params, x) - t) ** 2))
print(f"one hidden layer: training RMSE {rmse:.3f} after {res.iterations} iterations")
