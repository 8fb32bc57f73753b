"""Reference values for tests/test_oracles.cpp, computed with numpy and torch.

Run: python3 tests/oracles/generate.py
"""
import numpy as np
import torch

np.set_printoptions(precision=17)


def r(x):
    return ", ".join(repr(float(v)) for v in np.ravel(x))


# Heavy ball with weight decay on an explicit quadratic f = w'Aw.
A = np.array([[3.0, 0.5, -0.2], [0.5, 2.0, 0.1], [-0.2, 0.1, 1.0]])
w = np.array([1.0, -2.0, 0.5])
g = np.zeros(3)
eta, mu, wd = 0.05, 0.9, 0.01
for _ in range(5):
    g = mu * g + (2 * A @ w + wd * w)
    w = w - eta * g
print("heavy_ball w5:", r(w))
print("heavy_ball g5:", r(g))

# Toy network [2, 3, 2], tanh, mean softmax cross-entropy.
torch.set_default_dtype(torch.float64)
W1 = torch.tensor([[0.3, -0.7], [0.5, 0.2], [-0.4, 0.9]], requires_grad=True)
b1 = torch.tensor([0.1, -0.2, 0.05], requires_grad=True)
W2 = torch.tensor([[0.6, -0.3, 0.8], [-0.5, 0.4, 0.2]], requires_grad=True)
b2 = torch.tensor([0.0, 0.3], requires_grad=True)
X = torch.tensor([[0.5, 1.0], [-1.2, 0.3], [0.0, -0.8], [2.0, 0.7]])
y = torch.tensor([0, 1, 1, 0])
h = torch.tanh(X @ W1.T + b1)
logits = h @ W2.T + b2
loss = torch.nn.functional.cross_entropy(logits, y)
loss.backward()
flat = lambda W: W.detach().T.reshape(-1).numpy()  # column-major
params = np.concatenate([flat(W1), b1.detach().numpy(), flat(W2), b2.detach().numpy()])
grad = np.concatenate([W1.grad.T.reshape(-1).numpy(), b1.grad.numpy(), W2.grad.T.reshape(-1).numpy(), b2.grad.numpy()])
print("mlp params:", r(params))
print("mlp loss:", repr(loss.item()))
print("mlp grad:", r(grad))

# Least-squares line.
x = np.array([1.0, 2.0, 3.0, 5.0, 8.0])
yv = np.array([0.11, 0.19, 0.32, 0.48, 0.83])
slope, intercept = np.polyfit(x, yv, 1)
pred = slope * x + intercept
r2 = 1 - np.sum((yv - pred) ** 2) / np.sum((yv - yv.mean()) ** 2)
print("fit:", repr(slope), repr(intercept), repr(r2))

# Log-spaced grid.
grid = np.logspace(np.log10(1e-7), np.log10(5e5), 50)
print("grid[1], grid[25], grid[48]:", r(grid[[1, 25, 48]]))

# Eigenvalues of the diag(1, 4) quadratic after a rotation by 30 degrees.
c, s = np.cos(np.pi / 6), np.sin(np.pi / 6)
Q = np.array([[c, -s], [s, c]])
M = Q @ np.diag([1.0, 4.0]) @ Q.T
print("rotated:", r(M))
