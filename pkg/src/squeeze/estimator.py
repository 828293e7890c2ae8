"""scikit-learn style wrappers so the maps and the simulator compose in pipelines."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import Engine, RuleSet, step
from .grid import CellState, Layout, from_expanded, to_expanded
from .maps import block_params, lambda_map_many, nu_map_many
from .nbb import geometry, resolve_spec


class SqueezeMapper(TransformerMixin, BaseEstimator):
    """Compact -> expanded coordinates on ``transform``, back on ``inverse_transform``.

    Rows of ``X`` are ``(x, y)`` integer pairs. With ``rho > 1`` the rows are
    block coordinates of the coarser level. If ``level`` is None, ``fit``
    picks the smallest level whose compact region holds every row of ``X``.
    """

    def __init__(self, fractal="sierpinski-triangle", level=None, rho=1):
        self.fractal = fractal
        self.level = level
        self.rho = rho

    def _validate(self, X):
        X = check_array(X, dtype=np.int64)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (x, y), got {X.shape[1]}")
        if X.size and X.min() < 0:
            raise ValueError("coordinates must be non-negative")
        return X

    def fit(self, X=None, y=None):
        self.spec_ = resolve_spec(self.fractal)
        if self.level is not None:
            level = int(self.level)
        else:
            if X is None:
                raise ValueError("level is None and no X given to infer it from")
            X = self._validate(X)
            level = 0
            while True:
                g = geometry(self.spec_, level)
                if X[:, 0].max() < g.compact_w and X[:, 1].max() < g.compact_h:
                    break
                level += 1
        self.level_ = level
        self.block_level_ = block_params(self.spec_, level, self.rho).r_b
        self.geometry_ = geometry(self.spec_, self.block_level_)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "level_")
        return lambda_map_many(self.spec_, self.block_level_, self._validate(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "level_")
        return nu_map_many(self.spec_, self.block_level_, self._validate(X))

    def get_feature_names_out(self, input_features=None):
        return np.array(["x", "y"], dtype=object)


class FractalLife(TransformerMixin, BaseEstimator):
    """Advance an expanded ``[y, x]`` state array by ``steps`` generations.

    Nonzero entries on fractal cells are alive; the output uses the
    ``CellState`` codes (0 dead, 1 alive, 2 hole).
    """

    def __init__(self, fractal="sierpinski-triangle", level=4, engine="squeeze",
                 rho=1, rules="B3/S23", steps=1, use_mma=False):
        self.fractal = fractal
        self.level = level
        self.engine = engine
        self.rho = rho
        self.rules = rules
        self.steps = steps
        self.use_mma = use_mma

    def fit(self, X=None, y=None):
        self.spec_ = resolve_spec(self.fractal)
        self.engine_ = Engine(self.engine)
        self.rules_ = self.rules if isinstance(self.rules, RuleSet) else RuleSet.parse(self.rules)
        block_params(self.spec_, self.level, self.rho)
        if self.engine_ is Engine.SQUEEZE:
            self.layout_ = Layout.FLAT_COMPACT if self.rho == 1 else Layout.BLOCK_TILED
        else:
            self.layout_ = Layout.EXPANDED
        self.side_ = geometry(self.spec_, self.level).n
        return self

    def transform(self, X):
        check_is_fitted(self, "layout_")
        X = check_array(X, dtype=np.int64)
        if X.shape != (self.side_, self.side_):
            raise ValueError(f"expected a {self.side_}x{self.side_} state, got {X.shape}")
        states = np.where(X != 0, CellState.ALIVE, CellState.DEAD)
        rho = self.rho if self.layout_ is Layout.BLOCK_TILED else None
        grid = from_expanded(self.layout_, self.spec_, self.level, states, rho)
        for _ in range(self.steps):
            step(grid, self.rules_, self.engine_, rho=self.rho, use_mma=self.use_mma)
        return to_expanded(grid)
