"""Scikit-learn estimator facade over the circuit trainers.

``CircuitClassifier`` exposes the four architectures through the standard
fit/predict surface (``get_params``/``set_params``/``clone`` included), so
the models drop into pipelines, grid searches and cross-validation like any
other binary classifier on binary rasters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .networks import ModelConfig, forward, patch_permutation, predict
from .training import TrainSchedule, train_on_arrays
from .validation import check_binary_images, check_classification_targets


class CircuitClassifier(BaseEstimator, ClassifierMixin):
    """Binary-image classifier backed by a convolutional circuit.

    Parameters
    ----------
    arch : one of deep_cac, shallow_cac, deep_relu_max, deep_relu_avg.
    pooling : square or mirror window geometry (deep architectures).
    channels : uniform hidden width.
    iterations, batch_size : optimization budget.
    lr_drop_step : step after which the learning rate drops tenfold;
        defaults to 80% of the iteration budget.
    seed : controls initialization and batch order; fixed seeds give
        bit-identical fits.
    """

    def __init__(
        self,
        arch: str = "deep_cac",
        pooling: str = "square",
        channels: int = 16,
        iterations: int = 1000,
        batch_size: int = 64,
        lr_drop_step: int | None = None,
        seed: int = 0,
    ):
        self.arch = arch
        self.pooling = pooling
        self.channels = channels
        self.iterations = iterations
        self.batch_size = batch_size
        self.lr_drop_step = lr_drop_step
        self.seed = seed

    def _config(self, side: int) -> ModelConfig:
        return ModelConfig(
            arch=self.arch, geometry=self.pooling, side=side, channels=self.channels
        )

    def fit(self, X, y):
        X = check_binary_images(X)
        y = check_classification_targets(y, len(X))
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise ValueError(f"expected exactly 2 classes, got {len(self.classes_)}")
        cfg = self._config(X.shape[1])
        drop = self.lr_drop_step if self.lr_drop_step is not None else int(0.8 * self.iterations)
        schedule = TrainSchedule(
            iterations=self.iterations,
            batch_size=self.batch_size,
            lr_drop_step=drop,
            eval_every=0,
            n_train=len(X),
            n_test=0,
        )
        result = train_on_arrays(cfg, X, y_idx.astype(np.int64), None, None, schedule, self.seed)
        self.config_ = cfg
        self.params_ = result.params
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before predict")

    def decision_function(self, X) -> np.ndarray:
        """Score margin between the second and first class."""
        self._check_fitted()
        X = check_binary_images(X)
        scores = forward(self.config_, self.params_, X, patch_permutation(self.config_))
        return scores[:, 1] - scores[:, 0]

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_binary_images(X)
        idx = predict(self.config_, self.params_, X)
        return self.classes_[idx]
