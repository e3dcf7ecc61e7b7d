"""Three-layer perceptron trained by gradient descent or Levenberg-Marquardt.

Both trainers minimise the same objective, the mean squared error between the
logistic outputs and one-hot targets. Parameters are handled as one flat
vector in the order ``W1, b1, W2, b2`` (row-major).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .errors import NumericalError

GRAD_TOL = 1e-8
MU_FLOOR = 1e-300


def _tanh(z):
    return np.tanh(z)


def _logistic(z):
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _identity(z):
    return np.asarray(z, dtype=float)


ACTIVATIONS = {"tanh": _tanh, "logistic": _logistic, "identity": _identity}

# derivative expressed through the activation's output value
DERIVATIVES = {
    "tanh": lambda a: 1.0 - a * a,
    "logistic": lambda a: a * (1.0 - a),
    "identity": lambda a: np.ones_like(a),
}


@dataclass
class MlpModel:
    layer_sizes: tuple[int, int, int]
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    hidden_activation: str = "tanh"
    output_activation: str = "logistic"

    def __post_init__(self):
        d_in, d_hid, d_out = self.layer_sizes
        shapes = [(self.W1.shape, (d_hid, d_in)), (self.b1.shape, (d_hid,)),
                  (self.W2.shape, (d_out, d_hid)), (self.b2.shape, (d_out,))]
        for got, want in shapes:
            if got != want:
                raise ValueError(f"parameter shape {got} does not match layer sizes ({want})")
        for act in (self.hidden_activation, self.output_activation):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @property
    def n_params(self) -> int:
        d_in, d_hid, d_out = self.layer_sizes
        return d_hid * (d_in + 1) + d_out * (d_hid + 1)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    def with_params(self, theta) -> "MlpModel":
        d_in, d_hid, d_out = self.layer_sizes
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape}")
        i = 0
        parts = []
        for shape in ((d_hid, d_in), (d_hid,), (d_out, d_hid), (d_out,)):
            size = int(np.prod(shape))
            parts.append(theta[i:i + size].reshape(shape).copy())
            i += size
        return replace(self, W1=parts[0], b1=parts[1], W2=parts[2], b2=parts[3])

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [self.W1.tolist(), self.W2.tolist()],
            "biases": [self.b1.tolist(), self.b2.tolist()],
            "activations": [self.hidden_activation, self.output_activation],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MlpModel":
        (w1, w2), (b1, b2) = obj["weights"], obj["biases"]
        return cls(tuple(obj["layer_sizes"]), np.array(w1, dtype=float), np.array(b1, dtype=float),
                   np.array(w2, dtype=float), np.array(b2, dtype=float), *obj["activations"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def init_mlp(layer_sizes, seed: int = 0, hidden_activation: str = "tanh",
             output_activation: str = "logistic") -> MlpModel:
    """Uniform ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` weights and zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) != 3:
        raise ValueError("an MLP here has exactly three layers")
    if min(sizes) < 1:
        raise ValueError("every layer needs at least one unit")
    d_in, d_hid, d_out = sizes
    rng = np.random.default_rng(seed)
    lim1, lim2 = 1 / math.sqrt(d_in), 1 / math.sqrt(d_hid)
    W1 = rng.uniform(-lim1, lim1, size=(d_hid, d_in))
    W2 = rng.uniform(-lim2, lim2, size=(d_out, d_hid))
    return MlpModel(sizes, W1, np.zeros(d_hid), W2, np.zeros(d_out),
                    hidden_activation, output_activation)


def _check_inputs(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.layer_sizes[0]:
        raise ValueError(f"input dimension {X.shape[-1]} != {model.layer_sizes[0]}")
    return X


def _forward(model: MlpModel, X: np.ndarray):
    H = ACTIVATIONS[model.hidden_activation](X @ model.W1.T + model.b1)
    Y = ACTIVATIONS[model.output_activation](H @ model.W2.T + model.b2)
    return H, Y


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output for one input vector or a batch of row vectors."""
    X = _check_inputs(model, x)
    return _forward(model, np.atleast_2d(X))[1].reshape(X.shape[:-1] + (model.layer_sizes[2],))


def _check_targets(model: MlpModel, X, T):
    X = np.atleast_2d(_check_inputs(model, X))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if len(X) == 0:
        raise ValueError("empty dataset")
    if T.shape != (len(X), model.layer_sizes[2]):
        raise ValueError(f"targets must have shape {(len(X), model.layer_sizes[2])}, got {T.shape}")
    return X, T


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    T = np.zeros((len(labels), n_classes))
    T[np.arange(len(labels)), labels] = 1.0
    return T


def mse_loss(model: MlpModel, X, T) -> float:
    X, T = _check_targets(model, X, T)
    Y = _forward(model, X)[1]
    return float(np.mean((Y - T) ** 2))


def backprop_gradient(model: MlpModel, X, T) -> np.ndarray:
    """Gradient of :func:`mse_loss` as a flat vector (same order as ``params``)."""
    X, T = _check_targets(model, X, T)
    H, Y = _forward(model, X)
    dY = 2.0 * (Y - T) / Y.size
    dZ2 = dY * DERIVATIVES[model.output_activation](Y)
    dZ1 = (dZ2 @ model.W2) * DERIVATIVES[model.hidden_activation](H)
    return np.concatenate([(dZ1.T @ X).ravel(), dZ1.sum(axis=0),
                           (dZ2.T @ H).ravel(), dZ2.sum(axis=0)])


def residual_jacobian(model: MlpModel, X) -> np.ndarray:
    """Jacobian of the outputs, one row per (sample, output unit), sample-major."""
    X = np.atleast_2d(_check_inputs(model, X))
    d_in, d_hid, d_out = model.layer_sizes
    H, Y = _forward(model, X)
    s_out = DERIVATIVES[model.output_activation](Y)
    s_hid = DERIVATIVES[model.hidden_activation](H)
    J = np.zeros((len(X) * d_out, model.n_params))
    o_b1 = d_hid * d_in
    o_w2 = o_b1 + d_hid
    o_b2 = o_w2 + d_out * d_hid
    eye = np.eye(d_out)
    for n in range(len(X)):
        rows = slice(n * d_out, (n + 1) * d_out)
        # d y_k / d z1_j for every output k
        dz1 = s_out[n][:, None] * model.W2 * s_hid[n][None, :]
        J[rows, :o_b1] = (dz1[:, :, None] * X[n][None, None, :]).reshape(d_out, -1)
        J[rows, o_b1:o_w2] = dz1
        J[rows, o_w2:o_b2] = (s_out[n][:, None, None] * eye[:, :, None]
                              * H[n][None, None, :]).reshape(d_out, -1)
        J[rows, o_b2:] = eye * s_out[n][:, None]
    return J


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    hidden: int = 64
    learning_rate: float = 10.0
    max_epochs: int = 5000
    max_iterations: int = 200
    target_mse: float = 1e-3
    mu0: float = 1e-3
    mu_factor: float = 10.0
    mu_max: float = 1e10

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.hidden < 1 or self.max_epochs < 0 or self.max_iterations < 0:
            raise ValueError("hidden must be >= 1 and iteration limits >= 0")
        if self.target_mse <= 0 or self.mu0 <= 0 or self.mu_max <= 0:
            raise ValueError("target_mse, mu0 and mu_max must be positive")
        if self.mu_factor <= 1:
            raise ValueError("mu_factor must exceed 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    mse: float
    mu: float | None = None
    accepted: bool | None = None


@dataclass
class TrainTrace:
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: str = ""

    def append(self, *args, **kwargs):
        self.records.append(TraceRecord(*args, **kwargs))

    @property
    def mse(self) -> np.ndarray:
        return np.array([r.mse for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "mse", "mu", "accepted"])
        for r in self.records:
            w.writerow([r.iteration, repr(r.mse), "" if r.mu is None else repr(r.mu),
                        "" if r.accepted is None else int(r.accepted)])
        return buf.getvalue()


def _assert_finite(theta: np.ndarray, where: str):
    if not np.all(np.isfinite(theta)):
        raise NumericalError(f"non-finite parameters during {where}")


def train_bp(model: MlpModel, X, T, cfg: TrainConfig):
    """Full-batch gradient descent with a constant learning rate.

    Stops after ``cfg.max_epochs`` updates or once the MSE reaches
    ``cfg.target_mse``. Returns the trained model and its per-epoch trace.
    """
    X, T = _check_targets(model, X, T)
    trace = TrainTrace()
    current = model
    mse = mse_loss(current, X, T)
    trace.append(0, mse)
    for epoch in range(1, cfg.max_epochs + 1):
        if mse <= cfg.target_mse:
            break
        theta = current.params - cfg.learning_rate * backprop_gradient(current, X, T)
        _assert_finite(theta, "backpropagation")
        current = current.with_params(theta)
        mse = mse_loss(current, X, T)
        trace.append(epoch, mse)
    trace.stop_reason = "target_mse" if mse <= cfg.target_mse else "max_epochs"
    return current, trace


def gram_matrix(J: np.ndarray) -> np.ndarray:
    """``J J^T`` when J has fewer rows than columns, otherwise ``J^T J``."""
    R, P = J.shape
    return J @ J.T if R < P else J.T @ J


def lm_step(J: np.ndarray, r: np.ndarray, mu: float, gram: np.ndarray | None = None) -> np.ndarray:
    """Solve ``(J^T J + mu I) delta = -J^T r`` by Cholesky.

    With fewer residuals than parameters the identical step is obtained from
    the smaller system ``delta = -J^T (J J^T + mu I)^{-1} r``. ``gram`` may
    carry a precomputed :func:`gram_matrix` so rejected steps reuse it.

    Raises:
        numpy.linalg.LinAlgError: if the damped matrix is not positive definite.
    """
    R, P = J.shape
    A = (gram_matrix(J) if gram is None else gram).copy()
    A[np.diag_indices(len(A))] += mu
    factor = linalg.cho_factor(A, check_finite=True)
    if R < P:
        return -J.T @ linalg.cho_solve(factor, r)
    return -linalg.cho_solve(factor, J.T @ r)


def levenberg_marquardt(residual, jacobian, theta0, cfg: TrainConfig):
    """Damped Gauss-Newton minimisation of ``sum(residual(theta) ** 2)``.

    A step that lowers the sum of squares is accepted and the damping divided
    by ``cfg.mu_factor``; otherwise it is rejected and the damping multiplied.
    Iteration stops on ``mse <= target_mse``, damping above ``mu_max``, a
    gradient norm below 1e-8, or ``max_iterations``.

    Returns:
        ``(theta, trace)``; ``trace.records[0]`` holds the starting point.
    """
    theta = np.array(theta0, dtype=float)
    r = residual(theta)
    sse = float(r @ r)
    mu = cfg.mu0
    trace = TrainTrace()
    trace.append(0, sse / len(r), mu, True)
    trace.stop_reason = "max_iterations"
    J = None
    for it in range(1, cfg.max_iterations + 1):
        if sse / len(r) <= cfg.target_mse:
            trace.stop_reason = "target_mse"
            break
        if J is None:
            J = jacobian(theta)
            if np.linalg.norm(J.T @ r) < GRAD_TOL:
                trace.stop_reason = "gradient_norm"
                break
            gram = gram_matrix(J)
        try:
            delta = lm_step(J, r, mu, gram)
        except (np.linalg.LinAlgError, ValueError):
            trace.append(it, sse / len(r), mu, False)
            mu *= cfg.mu_factor
            if mu > cfg.mu_max:
                raise NumericalError(
                    f"LM system stayed singular up to damping {mu / cfg.mu_factor:.3g}") from None
            continue
        cand = theta + delta
        r_new = residual(cand)
        sse_new = float(r_new @ r_new)
        accepted = bool(np.isfinite(sse_new) and sse_new < sse)
        if accepted:
            _assert_finite(cand, "Levenberg-Marquardt")
            theta, r, sse, J = cand, r_new, sse_new, None
        trace.append(it, sse / len(r), mu, accepted)
        mu = max(mu / cfg.mu_factor, MU_FLOOR) if accepted else mu * cfg.mu_factor
        if mu > cfg.mu_max:
            trace.stop_reason = "mu_max"
            break
    return theta, trace


def train_lm(model: MlpModel, X, T, cfg: TrainConfig):
    """Levenberg-Marquardt on the stacked residuals ``output - target``."""
    X, T = _check_targets(model, X, T)
    target = T.ravel()

    def residual(theta):
        return _forward(model.with_params(theta), X)[1].ravel() - target

    def jacobian(theta):
        return residual_jacobian(model.with_params(theta), X)

    theta, trace = levenberg_marquardt(residual, jacobian, model.params, cfg)
    return model.with_params(theta), trace


def predict_mlp(model: MlpModel, x) -> int:
    """Index of the largest output; ties go to the lowest index."""
    return int(np.argmax(forward(model, x)))
