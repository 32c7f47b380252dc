"""Estimator-style facade over the training engine.

PinnRegressor follows the fit/predict/get_params protocol so it can sit in
familiar model-selection loops, without depending on any estimator
framework.  Constructor arguments are stored verbatim; everything is
resolved at fit() time.
"""
from __future__ import annotations

import numpy as np

from .network import MlpParams, forward
from .pdes import get_problem
from .training import (TrainConfig, evaluate_mae, normalizer_for, train)

_PARAM_NAMES = (
    "problem", "width", "depth", "activation", "init", "omega0",
    "n_collocation", "n_boundary", "epochs", "lr0", "decay_factor",
    "decay_every", "w_residual", "w_boundary", "normalize_inputs", "seed",
)


class PinnRegressor:
    """Trains an MLP so a differential operator applied to it matches a
    benchmark PDE, then predicts the solution at arbitrary points.

    Parameters mirror TrainConfig; ``width``/``depth`` expand to the hidden
    layer sizes ([width] * depth).  ``n_collocation``/``n_boundary``/
    ``epochs`` of None pick the benchmark protocol for the problem.
    """

    def __init__(self, problem="transport", width=64, depth=2,
                 activation="tanh", init="xavier-normal", omega0=30.0,
                 n_collocation=None, n_boundary=None, epochs=2000,
                 lr0=1e-3, decay_factor=0.9, decay_every=1000,
                 w_residual=1.0, w_boundary=1.0, normalize_inputs=True,
                 seed=1):
        self.problem = problem
        self.width = width
        self.depth = depth
        self.activation = activation
        self.init = init
        self.omega0 = omega0
        self.n_collocation = n_collocation
        self.n_boundary = n_boundary
        self.epochs = epochs
        self.lr0 = lr0
        self.decay_factor = decay_factor
        self.decay_every = decay_every
        self.w_residual = w_residual
        self.w_boundary = w_boundary
        self.normalize_inputs = normalize_inputs
        self.seed = seed

    # -- estimator protocol -------------------------------------------------
    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in _PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r} for PinnRegressor")
            setattr(self, name, value)
        return self

    # -- fitting ------------------------------------------------------------
    def _config(self) -> TrainConfig:
        from .repro import CELL_PROTOCOL

        proto = CELL_PROTOCOL.get(self.problem)
        n_col = self.n_collocation
        n_bnd = self.n_boundary
        if proto is not None:
            n_col = proto[0] if n_col is None else n_col
            n_bnd = proto[1] if n_bnd is None else n_bnd
        if n_col is None or n_bnd is None:
            raise ValueError("n_collocation/n_boundary required for this problem")
        d = get_problem(self.problem).d
        return TrainConfig(
            problem=self.problem,
            layer_sizes=(d, *([self.width] * self.depth), 1),
            activation=self.activation,
            init=self.init,
            omega0=self.omega0,
            n_collocation=n_col,
            n_boundary=n_bnd,
            epochs=self.epochs,
            lr0=self.lr0,
            decay_factor=self.decay_factor,
            decay_every=self.decay_every,
            w_residual=self.w_residual,
            w_boundary=self.w_boundary,
            normalize_inputs=self.normalize_inputs,
            seed=self.seed,
        )

    def fit(self, X=None, y=None):
        """Train the network; X optionally fixes the collocation points.

        y is accepted for interface compatibility and must be None: the
        training signal is the PDE itself, not labels.
        """
        if y is not None:
            raise ValueError("PinnRegressor is self-supervised; y must be None")
        cfg = self._config()
        self.problem_ = get_problem(self.problem)
        self.config_ = cfg
        self.params_, self.history_ = train(cfg, collocation=X)
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("this PinnRegressor has not been fitted yet")

    def predict(self, X) -> np.ndarray:
        """Network solution at points X given in problem coordinates."""
        self._check_fitted()
        pts = np.asarray(X, dtype=np.float64)
        if self.config_.normalize_inputs:
            pts = normalizer_for(self.problem_).to_unit(pts)
        out, _ = forward(self.params_, pts)
        return out[:, 0]

    def mae(self, resolution: int = 256) -> float:
        """Mean absolute error against the closed-form solution."""
        self._check_fitted()
        return evaluate_mae(self.params_, self.problem_, resolution,
                            normalized_inputs=self.config_.normalize_inputs)

    def score(self, X=None, y=None) -> float:
        """Negative MAE on the evaluation grid (higher is better)."""
        return -self.mae()
