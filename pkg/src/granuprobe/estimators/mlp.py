"""Small fully connected regressor trained with Adam on mean squared error."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import DomainError


def relu(z):
    return np.maximum(z, 0.0)


def _standardizer(a):
    mean = a.mean(axis=0)
    scale = a.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def forward(coefs, intercepts, Z):
    """Run standardized inputs through the network; returns all layer activations."""
    acts = [Z]
    pre = []
    for k, (W, b) in enumerate(zip(coefs, intercepts)):
        z = acts[-1] @ W + b
        pre.append(z)
        acts.append(z if k == len(coefs) - 1 else relu(z))
    return acts, pre


def loss_and_grads(coefs, intercepts, Z, T):
    """Mean squared error over all outputs and its gradients, by backpropagation."""
    acts, pre = forward(coefs, intercepts, Z)
    resid = acts[-1] - T
    loss = float(np.mean(resid**2))
    delta = 2.0 * resid / resid.size
    gW = [None] * len(coefs)
    gb = [None] * len(coefs)
    for k in range(len(coefs) - 1, -1, -1):
        gW[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ coefs[k].T) * (pre[k - 1] > 0)
    return loss, gW, gb


class Adam:
    """Adam update rule over a flat list of parameter arrays."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class AdamMLPRegressor(RegressorMixin, BaseEstimator):
    """ReLU multilayer perceptron with a linear output, trained full-batch.

    Inputs and targets are z-scored with training statistics that are kept
    on the model, so predictions take raw inputs and return raw targets.
    Training stops early once the loss has improved by less than ``tol``
    over ``patience`` epochs.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Widths of the hidden layers.
    learning_rate, beta1, beta2, epsilon : float
        Adam settings.
    max_epochs : int
        Upper bound on full-batch epochs.
    tol, patience : float, int
        Early-stopping rule.
    random_state : int
        Seed for weight initialisation.
    """

    def __init__(
        self,
        hidden_layer_sizes=(16, 4),
        learning_rate=1e-3,
        max_epochs=2000,
        tol=1e-8,
        patience=100,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state

    @property
    def layer_dims(self):
        check_is_fitted(self, "coefs_")
        return [self.coefs_[0].shape[0]] + [W.shape[1] for W in self.coefs_]

    def _init_params(self, dims):
        rng = np.random.default_rng(self.random_state)
        coefs, intercepts = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(6.0 / fan_in)
            coefs.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            intercepts.append(np.zeros(fan_out))
        return coefs, intercepts

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        if X.shape[0] < 2:
            raise DomainError("need at least two training samples")
        Y = y.reshape(len(y), -1).astype(float)
        self.x_mean_, self.x_scale_ = _standardizer(X)
        self.y_mean_, self.y_scale_ = _standardizer(Y)
        Z = (X - self.x_mean_) / self.x_scale_
        T = (Y - self.y_mean_) / self.y_scale_

        dims = [X.shape[1], *self.hidden_layer_sizes, Y.shape[1]]
        coefs, intercepts = self._init_params(dims)
        params = coefs + intercepts
        opt = Adam(params, self.learning_rate, self.beta1, self.beta2, self.epsilon)
        history = []
        for epoch in range(self.max_epochs):
            loss, gW, gb = loss_and_grads(coefs, intercepts, Z, T)
            history.append(loss)
            if epoch >= self.patience and history[-self.patience - 1] - loss < self.tol:
                break
            opt.step(params, gW + gb)
        self.coefs_, self.intercepts_ = coefs, intercepts
        self.loss_curve_ = history
        self.loss_ = loss_and_grads(coefs, intercepts, Z, T)[0]
        self.n_epochs_ = len(history)
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        return self

    def predict(self, X):
        try:
            check_is_fitted(self, "coefs_")
        except NotFittedError as exc:
            raise DomainError("model has not been trained") from exc
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} inputs, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise DomainError("inputs must be finite")
        Z = (X - self.x_mean_) / self.x_scale_
        out = forward(self.coefs_, self.intercepts_, Z)[0][-1] * self.y_scale_ + self.y_mean_
        return out.ravel() if self.n_outputs_ == 1 else out

    def loss_and_gradients(self, X, y):
        """Training loss and parameter gradients at the current weights."""
        X = check_array(X)
        Y = np.asarray(y, dtype=float).reshape(len(X), -1)
        Z = (X - self.x_mean_) / self.x_scale_
        T = (Y - self.y_mean_) / self.y_scale_
        return loss_and_grads(self.coefs_, self.intercepts_, Z, T)


def mlp_forward(model: AdamMLPRegressor, x):
    """Prediction for one input vector (or a batch)."""
    x = np.asarray(x, dtype=float)
    out = model.predict(x)
    return out[0] if x.ndim == 1 and model.n_outputs_ == 1 else out


def mlp_train(X, y, layer_dims, hyperparams=None, seed=0) -> AdamMLPRegressor:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise DomainError("no training data")
    y = np.asarray(y, dtype=float)
    n_out = 1 if y.ndim == 1 else y.shape[1]
    if layer_dims[0] != X.shape[1] or layer_dims[-1] != n_out:
        raise DomainError(f"layer dims {layer_dims} do not match data {X.shape} -> {n_out}")
    model = AdamMLPRegressor(hidden_layer_sizes=tuple(layer_dims[1:-1]), random_state=seed)
    model.set_params(**(hyperparams or {}))
    return model.fit(X, y)
