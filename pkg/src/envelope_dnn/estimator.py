"""scikit-learn style wrapper around the dynamic nearest-site index."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .envelope import K0, ALPHA, PRUNE_C, NearestSiteIndex
from .geometry import Site


class NearestSite(BaseEstimator, TransformerMixin):
    """Nearest-site lookup with fit/predict/transform.

    fit(X) stores the rows of X (shape (n, 2)) as sites.  predict(Q) returns
    the row index of the nearest site for every query row and transform(Q)
    the distance to it.  partial_fit adds sites and remove() deletes them,
    so the fitted index stays fully dynamic.
    """

    def __init__(self, backend="chan", k0=K0, alpha=ALPHA, prune_c=PRUNE_C, seed=0):
        self.backend = backend
        self.k0 = k0
        self.alpha = alpha
        self.prune_c = prune_c
        self.seed = seed

    def _new_index(self):
        if self.backend == "chan":
            return NearestSiteIndex("chan", k0=self.k0, alpha=self.alpha,
                                    prune_c=self.prune_c, seed=self.seed)
        if self.backend == "brute":
            return NearestSiteIndex("brute")
        raise ValueError(f"unknown backend {self.backend!r}")

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns, got {X.shape[1]}")
        self.index_ = self._new_index()
        self.n_sites_ = 0
        self.n_features_in_ = 2
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "index_"):
            return self.fit(X)
        X = check_array(X, dtype=float)
        for x, yy in X:
            self.index_.insert(Site(self.n_sites_, float(x), float(yy)))
            self.n_sites_ += 1
        return self

    def remove(self, indices):
        check_is_fitted(self, "index_")
        for i in np.atleast_1d(indices):
            self.index_.delete(int(i))
        return self

    def _lookup(self, Q):
        check_is_fitted(self, "index_")
        Q = check_array(Q, dtype=float)
        if Q.shape[1] != 2:
            raise ValueError(f"expected 2 columns, got {Q.shape[1]}")
        idx = np.full(len(Q), -1, dtype=np.int64)
        dist = np.full(len(Q), np.inf)
        for r, (x, y) in enumerate(Q):
            res = self.index_.nearest(x, y)
            if res is not None:
                idx[r], dist[r] = res
        return idx, dist

    def predict(self, Q):
        return self._lookup(Q)[0]

    def transform(self, Q):
        return self._lookup(Q)[1][:, None]
