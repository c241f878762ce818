"""Estimator-style facades over the functional pipeline.

These wrappers follow the common fit/attribute convention: construction
stores hyperparameters only, ``fit`` performs the work and exposes results
through trailing-underscore attributes.  The functional modules remain the
primary API; the facades exist for pipeline-style composition.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .hedging import build_superhedge
from .leftcurtain import build_left_curtain, coupling_kernel, to_transport_plan
from .measures import Measure
from .pricing import StrikePair, price


class LeftCurtainCoupling(BaseEstimator):
    """Fit the monotone coupling of a pair of measures in convex order.

    Parameters
    ----------
    max_weight_factor : float
        Largest tolerated atom size in the time-1 measure, as a multiple of
        the average grid weight.

    Attributes
    ----------
    map_ : LeftCurtainMap
        The fitted lower/upper transport functions with jump data.
    plan_ : TransportPlan
        Discrete joint matrix realizing the coupling on the input grids.
    """

    def __init__(self, max_weight_factor=5.0):
        self.max_weight_factor = max_weight_factor

    def fit(self, mu: Measure, nu: Measure):
        self.map_ = build_left_curtain(mu, nu,
                                       max_weight_factor=self.max_weight_factor)
        self.plan_ = to_transport_plan(self.map_, mu, nu)
        self.mu_ = mu
        self.nu_ = nu
        return self

    def transform(self, x, side="left"):
        """Two-point conditional law [(y, mass), ...] at each abscissa."""
        check_is_fitted(self, "map_")
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = [coupling_kernel(self.map_, xi, side=side) for xi in xs]
        return out if np.ndim(x) else out[0]

    def sample(self, n, seed=None):
        check_is_fitted(self, "plan_")
        rng = np.random.default_rng(seed)
        return self.plan_.sample(rng, int(n))


class AmericanPutPricer(BaseEstimator):
    """Price the two-exercise-date American put upper bound.

    Parameters
    ----------
    k1, k2 : float
        Discounted strikes for the early and late exercise dates.
    with_hedge : bool
        Also construct and cost the cheapest superhedge during ``fit``.

    Attributes
    ----------
    solution_ : PricingSolution
    price_ : float
    region_ : str
    threshold_ : float
    hedge_ : Superhedge, only when ``with_hedge``.
    """

    def __init__(self, k1=1.0, k2=0.5, with_hedge=True):
        self.k1 = k1
        self.k2 = k2
        self.with_hedge = with_hedge

    def fit(self, mu: Measure, nu: Measure):
        K = StrikePair(self.k1, self.k2)
        self.map_ = build_left_curtain(mu, nu)
        self.solution_ = price(self.map_, mu, nu, K)
        self.price_ = self.solution_.price
        self.region_ = self.solution_.region.value
        self.threshold_ = self.solution_.threshold
        if self.with_hedge:
            self.hedge_ = build_superhedge(self.solution_, self.map_, mu, nu, K)
        return self

    def predict(self, x):
        """Exercise decision at time 1: 1 when x is below the threshold."""
        check_is_fitted(self, "solution_")
        x = np.asarray(x, dtype=float)
        return (x < self.threshold_).astype(int)
