"""Scikit-learn style wrappers around the pipeline and the image maps.

Two estimators cover the places where the fit/transform idiom actually fits:
``CandidateDecomposer`` runs the point-cloud pipeline on fit (like a
clusterer, it fits on the points of one cloud and exposes the result as a
trailing-underscore attribute), and ``ImageVectorizer`` turns collections of
decompositions into fixed-length image vectors on a grid frozen at fit time.
The core library stays function-first; these wrappers exist for pipelines and
grid searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .experiments import decompose_cloud
from .model import Decomposition
from .pipeline import PointCloud
from .representations import GridSpec, mpl, scdr_p, scdr_sup

__all__ = ["CandidateDecomposer", "ImageVectorizer"]


class CandidateDecomposer(BaseEstimator):
    """Pipeline estimator: point cloud in, candidate decomposition out.

    Parameters mirror :func:`mpcorner.experiments.decompose_cloud`.  After
    ``fit(X)`` (X of shape (n_points, 2), or a PointCloud) the results are
    available as ``decomposition_`` and ``bifiltration_``.
    """

    def __init__(
        self,
        bif_resolution=(32, 32),
        margin=0.3,
        bandwidth=0.3,
        num_lines=32,
        degree=1,
    ):
        self.bif_resolution = bif_resolution
        self.margin = margin
        self.bandwidth = bandwidth
        self.num_lines = num_lines
        self.degree = degree

    def fit(self, X, y=None):
        cloud = X if isinstance(X, PointCloud) else PointCloud(np.asarray(X, dtype=float))
        self.decomposition_, self.bifiltration_ = decompose_cloud(
            cloud,
            bif_resolution=tuple(self.bif_resolution),
            margin=self.margin,
            bandwidth=self.bandwidth,
            num_lines=self.num_lines,
            degree=self.degree,
        )
        return self

    def fit_decompose(self, X, y=None) -> Decomposition:
        return self.fit(X, y).decomposition_


class ImageVectorizer(BaseEstimator, TransformerMixin):
    """Decompositions to flat image vectors on a shared grid.

    ``p`` selects the aggregation: ``'sup'`` for the pointwise sup image, a
    nonnegative float for the weight-normalized sum.  ``landscape_k`` switches
    to the kth landscape instead.  ``window='auto'`` freezes the grid window
    at fit time from the corner bounding boxes (padded by ``delta``).
    """

    def __init__(
        self,
        kind="b",
        delta=0.1,
        p="sup",
        resolution=(50, 50),
        window="auto",
        landscape_k=None,
    ):
        self.kind = kind
        self.delta = delta
        self.p = p
        self.resolution = resolution
        self.window = window
        self.landscape_k = landscape_k

    def fit(self, X, y=None):
        decs = list(X)
        if not all(isinstance(d, Decomposition) for d in decs):
            raise TypeError("ImageVectorizer expects an iterable of Decomposition")
        if isinstance(self.window, str) and self.window == "auto":
            boxes = [m.bounding_box() for d in decs for m in d.intervals if not m.is_zero]
            if boxes:
                lo = np.min([b.lower for b in boxes], axis=0) - self.delta
                hi = np.max([b.upper for b in boxes], axis=0) + self.delta
            else:
                lo, hi = np.zeros(2), np.ones(2)
        else:
            lo, hi = (np.asarray(w, dtype=float) for w in self.window)
        self.grid_ = GridSpec(lo, hi, tuple(self.resolution))
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "grid_"):
            raise NotFittedError("ImageVectorizer must be fitted before transform")
        rows = [self._image(dec) for dec in X]
        if not rows:
            return np.empty((0, self.grid_.num_points))
        return np.stack(rows)

    def _image(self, dec: Decomposition) -> np.ndarray:
        if self.landscape_k is not None:
            return mpl(dec, int(self.landscape_k), self.grid_).values
        if isinstance(self.p, str) and self.p == "sup":
            return scdr_sup(dec, self.kind, self.delta, self.grid_).values
        if len(dec) == 0:
            return np.zeros(self.grid_.num_points)
        return scdr_p(dec, float(self.p), self.kind, self.delta, self.grid_).values
