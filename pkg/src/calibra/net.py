"""Dense feed-forward regressors trained with full-batch Adam.

Written against numpy directly: the networks here are small (a few dozen
weights per layer, at most a few thousand training rows), so explicit
reverse-mode accumulation is simpler to audit than a framework dependency
and keeps training bitwise deterministic under a fixed seed.

Inputs and targets are min-max scaled to [0, 1] internally. A degenerate
target column (constant over the training set) scales to zero and decodes
back to that exact constant, so constant quantities survive the regression
round trip with no error.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.special import expit

from calibra.mapping import ControlGrid, DEFAULT_GAP_FRAC, TransformMap


class TrainingError(RuntimeError):
    """Training diverged; ``history`` holds the loss trace up to the abort."""

    def __init__(self, message: str, history: np.ndarray):
        super().__init__(message)
        self.history = history


class Scaler:
    """Per-column min-max transform onto [0, 1].

    Columns with zero range transform to 0 and invert to their training
    value exactly.
    """

    def __init__(self, mins: np.ndarray, ranges: np.ndarray):
        self.mins = np.asarray(mins, dtype=float)
        self.ranges = np.asarray(ranges, dtype=float)

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        mins = X.min(axis=0)
        ranges = X.max(axis=0) - mins
        return cls(mins, ranges)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        safe = np.where(self.ranges > 0.0, self.ranges, 1.0)
        out = (X - self.mins) / safe
        return np.where(self.ranges > 0.0, out, 0.0)

    def inverse(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.where(self.ranges > 0.0, self.mins + Y * self.ranges, self.mins)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "ranges": self.ranges.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["mins"]), np.asarray(d["ranges"]))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


class MLP:
    """tanh multilayer perceptron with an identity or softplus output head."""

    def __init__(
        self,
        n_in: int,
        n_out: int,
        *,
        hidden_layers: int = 4,
        width: int = 16,
        out_activation: str = "identity",
        seed: int = 0,
    ):
        if out_activation not in ("identity", "softplus"):
            raise ValueError(f"unknown output activation {out_activation!r}")
        self.out_activation = out_activation
        dims = [n_in] + [width] * hidden_layers + [n_out]
        rng = np.random.default_rng(seed)
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(d_in)
            self.W.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
            self.b.append(rng.uniform(-bound, bound, size=d_out))
        self.scaler_in: Scaler | None = None
        self.scaler_out: Scaler | None = None

    # -- forward ------------------------------------------------------------

    def _forward_scaled(self, Xs: np.ndarray):
        """Activations per layer on scaled input; returns (a_list, z_list)."""
        a = [Xs]
        zs = []
        h = Xs
        last = len(self.W) - 1
        for j, (W, b) in enumerate(zip(self.W, self.b)):
            z = h @ W.T + b
            zs.append(z)
            if j < last:
                h = np.tanh(z)
            elif self.out_activation == "softplus":
                h = _softplus(z)
            else:
                h = z
            a.append(h)
        return a, zs

    def forward_scaled(self, Xs: np.ndarray) -> np.ndarray:
        return self._forward_scaled(np.atleast_2d(Xs))[0][-1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Raw-space prediction: scale, forward, unscale."""
        if self.scaler_in is None or self.scaler_out is None:
            raise TrainingError("network has not been trained", np.empty(0))
        Ys = self.forward_scaled(self.scaler_in.transform(X))
        return self.scaler_out.inverse(Ys)

    # -- backward -----------------------------------------------------------

    def loss_and_gradient(self, Xs: np.ndarray, Ys: np.ndarray):
        """Mean-squared-error loss and its exact parameter gradient.

        Operates in scaled space; the loss averages over every entry of the
        target array.
        """
        Xs = np.atleast_2d(Xs)
        Ys = np.atleast_2d(Ys)
        a, zs = self._forward_scaled(Xs)
        pred = a[-1]
        diff = pred - Ys
        loss = float(np.mean(diff**2))
        scale = 2.0 / diff.size
        if self.out_activation == "softplus":
            delta = scale * diff * expit(zs[-1])
        else:
            delta = scale * diff
        gW = [np.empty(0)] * len(self.W)
        gb = [np.empty(0)] * len(self.b)
        for j in range(len(self.W) - 1, -1, -1):
            gW[j] = delta.T @ a[j]
            gb[j] = delta.sum(axis=0)
            if j > 0:
                delta = (delta @ self.W[j]) * (1.0 - a[j] ** 2)
        return loss, gW, gb

    # -- training -----------------------------------------------------------

    def train(
        self,
        X: np.ndarray,
        Y: np.ndarray,
        *,
        epochs: int = 10000,
        tol: float = 1e-5,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> np.ndarray:
        """Full-batch Adam until the scaled-space MSE drops below ``tol``.

        Fits the scalers on the training data and returns the loss history.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise ValueError("input and target sample counts differ")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise TrainingError("training data contains non-finite values", np.empty(0))
        self.scaler_in = Scaler.fit(X)
        self.scaler_out = Scaler.fit(Y)
        Xs = self.scaler_in.transform(X)
        Ys = self.scaler_out.transform(Y)

        mW = [np.zeros_like(w) for w in self.W]
        vW = [np.zeros_like(w) for w in self.W]
        mb = [np.zeros_like(b) for b in self.b]
        vb = [np.zeros_like(b) for b in self.b]
        history = np.empty(epochs)
        for k in range(epochs):
            loss, gW, gb = self.loss_and_gradient(Xs, Ys)
            history[k] = loss
            if not np.isfinite(loss):
                raise TrainingError(
                    f"loss became non-finite at epoch {k}", history[: k + 1].copy()
                )
            if loss < tol:
                return history[: k + 1].copy()
            t = k + 1
            corr = np.sqrt(1.0 - beta2**t) / (1.0 - beta1**t)
            for j in range(len(self.W)):
                mW[j] = beta1 * mW[j] + (1.0 - beta1) * gW[j]
                vW[j] = beta2 * vW[j] + (1.0 - beta2) * gW[j] ** 2
                self.W[j] -= lr * corr * mW[j] / (np.sqrt(vW[j]) + eps)
                mb[j] = beta1 * mb[j] + (1.0 - beta1) * gb[j]
                vb[j] = beta2 * vb[j] + (1.0 - beta2) * gb[j] ** 2
                self.b[j] -= lr * corr * mb[j] / (np.sqrt(vb[j]) + eps)
        return history

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "out_activation": self.out_activation,
            "W": [w.tolist() for w in self.W],
            "b": [b.tolist() for b in self.b],
            "scaler_in": None if self.scaler_in is None else self.scaler_in.to_dict(),
            "scaler_out": None if self.scaler_out is None else self.scaler_out.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLP":
        W = [np.asarray(w, dtype=float) for w in d["W"]]
        net = cls(
            W[0].shape[1],
            W[-1].shape[0],
            hidden_layers=len(W) - 1,
            width=W[0].shape[0],
            out_activation=d["out_activation"],
        )
        net.W = W
        net.b = [np.asarray(b, dtype=float) for b in d["b"]]
        if d["scaler_in"] is not None:
            net.scaler_in = Scaler.from_dict(d["scaler_in"])
        if d["scaler_out"] is not None:
            net.scaler_out = Scaler.from_dict(d["scaler_out"])
        return net


class CalibrationNet:
    """Parameter-to-control-points regressor.

    Targets are the per-line difference encodings of the optimal control
    points; the softplus head keeps raw outputs positive and the decode step
    guarantees the predicted points are feasible (ordered, inside the box).
    """

    def __init__(self, cgrid: ControlGrid, mlp: MLP, gap_frac: float = DEFAULT_GAP_FRAC):
        self.cgrid = cgrid
        self.mlp = mlp
        self.gap_frac = gap_frac

    @classmethod
    def fit(
        cls,
        cgrid: ControlGrid,
        params: np.ndarray,
        points: np.ndarray,
        *,
        hidden_layers: int = 4,
        width: int = 16,
        epochs: int = 20000,
        tol: float = 1e-6,
        lr: float = 1e-3,
        seed: int = 0,
        gap_frac: float = DEFAULT_GAP_FRAC,
    ) -> tuple["CalibrationNet", np.ndarray]:
        """Train on optimal configurations; returns (net, loss history).

        ``params`` has shape (n, n_params); ``points`` holds the optimal
        control points, shape (n, n_points, ndim).
        """
        params = np.atleast_2d(np.asarray(params, dtype=float))
        targets = np.stack([cgrid.encode_differences(w) for w in points])
        mlp = MLP(
            params.shape[1],
            cgrid.n_free,
            hidden_layers=hidden_layers,
            width=width,
            out_activation="softplus",
            seed=seed,
        )
        history = mlp.train(params, targets, epochs=epochs, tol=tol, lr=lr)
        return cls(cgrid, mlp, gap_frac), history

    def predict_points(self, mu: np.ndarray) -> np.ndarray:
        v = self.mlp.predict(np.atleast_2d(mu))[0]
        return self.cgrid.decode_differences(v, self.gap_frac)

    def predict_map(self, mu: np.ndarray) -> TransformMap:
        return TransformMap(self.cgrid, self.predict_points(mu))

    def to_dict(self) -> dict:
        return {
            "control_grid": self.cgrid.to_dict(),
            "mlp": self.mlp.to_dict(),
            "gap_frac": self.gap_frac,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationNet":
        return cls(
            ControlGrid.from_dict(d["control_grid"]),
            MLP.from_dict(d["mlp"]),
            float(d["gap_frac"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationNet":
        return cls.from_dict(json.loads(Path(path).read_text()))
