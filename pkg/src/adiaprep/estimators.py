"""scikit-learn style front-ends.

``AdiabaticPreparation.fit(H1)`` selects the preconditioner and the tracked
bands; ``predict(taus)`` returns the leakage ``eps_AT`` for each time.
``ExponentialDecayRegressor`` fits ``ln eps = c - tau / g``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_hamiltonian, check_schedule, check_taus
from .evolution import EvolutionPlan, epsilon_at, evolve
from .experiment import FIT_CEILING, FIT_FLOOR, fit_exponential, prepare
from .hamiltonians import build_h0
from .optimize import OptimizeSpec
from .spectral import BandSelector, gap_profile


class AdiabaticPreparation(BaseEstimator):
    def __init__(
        self,
        approach="g-tilde",
        schedule="linear",
        band_k=1,
        sector="auto",
        stepper="trotter2",
        dt=0.01,
        dt_max=0.01,
        search_bounds=None,
        search_points=21,
        search_rounds=3,
        translation_invariant=True,
        n_jobs=1,
    ):
        self.approach = approach
        self.schedule = schedule
        self.band_k = band_k
        self.sector = sector
        self.stepper = stepper
        self.dt = dt
        self.dt_max = dt_max
        self.search_bounds = search_bounds
        self.search_points = search_points
        self.search_rounds = search_rounds
        self.translation_invariant = translation_invariant
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        """``X`` is the target Hamiltonian (``PauliSum`` or ``LatticeSpec``)."""
        h1 = check_hamiltonian(X)
        self.schedule_ = check_schedule(self.schedule)
        band = BandSelector(k=int(self.band_k), sector=self.sector)
        search = OptimizeSpec(
            approach=self.approach,
            bounds=self.search_bounds,
            points=self.search_points,
            rounds=self.search_rounds,
            translation_invariant=self.translation_invariant,
        )
        prep = prepare(h1, self.approach, self.schedule_, band, search, n_jobs=self.n_jobs)
        self.h1_ = h1
        self.h0_ = build_h0(h1, prep.preconditioner)
        self.preconditioner_ = prep.preconditioner
        self.alphas_ = np.asarray(prep.preconditioner.alphas)
        self.optimize_result_ = prep.optimization
        self.band_ = prep.band
        self.initial_basis_ = prep.initial_basis
        self.target_projector_ = prep.target
        self.n_qubits_ = h1.n_qubits
        return self

    def gap_profile(self, grid=None):
        check_is_fitted(self, "h0_")
        return gap_profile(self.h0_, self.h1_, self.schedule_, self.band_, grid=grid, n_jobs=self.n_jobs)

    def evolve(self, tau):
        """Evolved orthonormal basis of the initial band after time ``tau``."""
        check_is_fitted(self, "h0_")
        plan = EvolutionPlan.from_dt(float(tau), self.dt, self.stepper, self.dt_max)
        return evolve(self.h0_, self.h1_, self.schedule_, plan, self.initial_basis_)

    def predict(self, X):
        """``eps_AT`` for each thermalization time in ``X``."""
        check_is_fitted(self, "h0_")
        taus = check_taus(X)
        return np.array([epsilon_at(self.target_projector_, self.evolve(t)) for t in taus])


class ExponentialDecayRegressor(RegressorMixin, BaseEstimator):
    def __init__(self, floor=FIT_FLOOR, ceiling=FIT_CEILING):
        self.floor = floor
        self.ceiling = ceiling

    def fit(self, X, y):
        taus = check_taus(X)
        eps = check_taus(y, name="epsilon")
        if taus.shape != eps.shape:
            raise ValueError(f"X and y lengths differ: {taus.shape[0]} vs {eps.shape[0]}")
        fit = fit_exponential(taus, eps, self.floor, self.ceiling)
        self.fit_result_ = fit
        self.g_fit_ = fit.g_fit
        self.c_fit_ = fit.c_fit
        self.std_g_ = fit.std_g
        self.std_c_ = fit.std_c
        self.r_squared_ = fit.r_squared
        self.points_used_ = fit.points_used
        return self

    def predict(self, X):
        check_is_fitted(self, "g_fit_")
        taus = check_taus(X)
        return np.exp(self.c_fit_ - taus / self.g_fit_)

    def score(self, X, y, sample_weight=None):
        """Coefficient of determination of ``ln eps`` inside the fit window."""
        check_is_fitted(self, "g_fit_")
        taus, eps = check_taus(X), check_taus(y, name="epsilon")
        keep = (eps > self.floor) & (eps < self.ceiling)
        y_true = np.log(eps[keep])
        y_pred = self.c_fit_ - taus[keep] / self.g_fit_
        ss_res = np.sum((y_true - y_pred) ** 2)
        ss_tot = np.sum((y_true - y_true.mean()) ** 2)
        return float(1.0 - ss_res / ss_tot)
