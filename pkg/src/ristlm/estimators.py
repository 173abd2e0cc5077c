"""scikit-learn style wrappers around the cell model and the phase synthesis.

Both estimators take flat scalar hyperparameters so ``get_params``,
``set_params`` and ``clone`` behave like any other estimator, and so they
slot into pipelines and parameter grids.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cell import ModelOptions, Polarization, UnitCellDesign, VaractorModel, reflection_coefficient
from .synthesis import N_SCAN, invert_phase, wrap_phase


class _CellParamsMixin:
    def _build(self):
        cell = UnitCellDesign(
            D_x=self.D, D_y=self.D, w_x=self.w, w_y=self.w, d=self.d,
            eps_r=self.eps_r, sigma_c=self.sigma_c, ground_correction=self.ground_correction,
        )
        varactor = VaractorModel(R_var=self.R_var, L_var=self.L_var, C_min=self.C_min, C_max=self.C_max)
        options = ModelOptions(strict_skin_depth=self.strict_skin_depth, te_factor_exponent=self.te_factor_exponent)
        self.cell_ = cell
        self.varactor_ = varactor
        self.options_ = options
        self.pol_ = Polarization.parse(self.pol)


class ReflectionModel(_CellParamsMixin, BaseEstimator):
    """Reflection coefficient of a square-lattice cell as a predictor.

    ``predict`` takes rows of ``[f_hz, theta_rad, c_farad]`` and returns the
    complex reflection coefficient for each row.  ``fit`` learns nothing; it
    validates the hyperparameters and freezes the derived design objects.

    >>> m = ReflectionModel().fit()
    >>> m.predict([[8e9, 0.0, 0.3e-12]]).shape
    (1,)
    """

    def __init__(self, D=5e-3, w=0.5e-3, d=1.2e-3, eps_r=4.4 - 0.088j, sigma_c=58.7e6,
                 R_var=0.5, L_var=0.7e-9, C_min=0.1e-12, C_max=0.5e-12, pol="TE",
                 ground_correction=None, te_factor_exponent=1, strict_skin_depth=False):
        self.D = D
        self.w = w
        self.d = d
        self.eps_r = eps_r
        self.sigma_c = sigma_c
        self.R_var = R_var
        self.L_var = L_var
        self.C_min = C_min
        self.C_max = C_max
        self.pol = pol
        self.ground_correction = ground_correction
        self.te_factor_exponent = te_factor_exponent
        self.strict_skin_depth = strict_skin_depth

    def fit(self, X=None, y=None):
        self._build()
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        check_is_fitted(self, "cell_")
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != 3:
            raise ValueError(f"expected columns [f_hz, theta_rad, c_farad], got {X.shape[1]} columns")
        f, theta, c = X.T
        return np.asarray(
            reflection_coefficient(self.cell_, self.varactor_, c, f, theta, self.pol_, self.options_).gamma
        ).reshape(-1)

    def predict_phase(self, X):
        return np.angle(self.predict(X))

    def predict_amplitude(self, X):
        return np.abs(self.predict(X))


class PhaseSynthesizer(_CellParamsMixin, TransformerMixin, BaseEstimator):
    """Maps ``[theta_rad, target_phase_rad]`` rows to ``[theta_rad, c_farad]``.

    The incidence angle passes through unchanged so ``inverse_transform``
    can recover the achieved phase from the output alone.  After
    ``transform``, ``clamped_`` flags rows whose target was out of reach.
    """

    def __init__(self, f=8e9, D=5e-3, w=0.5e-3, d=1.2e-3, eps_r=4.4 - 0.088j, sigma_c=58.7e6,
                 R_var=0.5, L_var=0.7e-9, C_min=0.1e-12, C_max=0.5e-12, pol="TE",
                 ground_correction=None, te_factor_exponent=1, strict_skin_depth=False, n_scan=N_SCAN):
        self.f = f
        self.D = D
        self.w = w
        self.d = d
        self.eps_r = eps_r
        self.sigma_c = sigma_c
        self.R_var = R_var
        self.L_var = L_var
        self.C_min = C_min
        self.C_max = C_max
        self.pol = pol
        self.ground_correction = ground_correction
        self.te_factor_exponent = te_factor_exponent
        self.strict_skin_depth = strict_skin_depth
        self.n_scan = n_scan

    def fit(self, X=None, y=None):
        if not self.f > 0:
            raise ValueError("f must be positive")
        if int(self.n_scan) < 2:
            raise ValueError("n_scan must be at least 2")
        self._build()
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "cell_")
        X = self._check_two_columns(X)
        theta, target = X[:, 0], wrap_phase(X[:, 1])
        inv = invert_phase(self.cell_, self.varactor_, self.f, self.pol_, theta, target, self.options_, int(self.n_scan))
        self.clamped_ = np.asarray(inv.clamped)
        return np.column_stack([theta, inv.c_var])

    def inverse_transform(self, X):
        """``[theta_rad, c_farad]`` rows back to ``[theta_rad, achieved_phase_rad]``."""
        check_is_fitted(self, "cell_")
        X = self._check_two_columns(X)
        g = reflection_coefficient(self.cell_, self.varactor_, X[:, 1], self.f, X[:, 0], self.pol_, self.options_).gamma
        return np.column_stack([X[:, 0], np.angle(g)])

    def get_feature_names_out(self, input_features=None):
        return np.array(["theta_rad", "c_farad"], dtype=object)

    @staticmethod
    def _check_two_columns(X):
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected two columns, got {X.shape[1]}")
        return X
