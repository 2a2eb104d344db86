"""Estimator-style wrappers around the two mapping stages.

``RecordMapping`` and ``EmbodimentMapping`` follow the scikit-learn
conventions (parameters stored verbatim in ``__init__``, resolution in
``fit``, pure ``transform``, ``get_params``/``set_params``), so the two
stages compose into a standard pipeline:

    Pipeline([("record", RecordMapping()), ("embody", EmbodimentMapping(hand="mia"))])
"""

from __future__ import annotations

import inspect

from .embody import EmbodimentConfig, embody_trajectory
from .fileio import load_embodiment_config, load_record_config
from .mocap import MarkerSequence, fill_gaps
from .record import RecordConfig, record_sequence


class _ParamsMixin:
    """get_params/set_params over the __init__ signature, sklearn style."""

    @classmethod
    def _param_names(cls):
        signature = inspect.signature(cls.__init__)
        return [name for name in signature.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items()
                         if v is not None)
        return f"{type(self).__name__}({args})"

    def _check_fitted(self, attr: str):
        if not hasattr(self, attr):
            raise RuntimeError(f"{type(self).__name__} is not fitted; call fit() first")


class RecordMapping(_ParamsMixin):
    """Marker sequences to hand-model state trajectories.

    Parameters
    ----------
    config : RecordConfig, optional
        Fully built config; takes precedence over the path parameters.
    config_path, hand_model_path : str, optional
        YAML locations; packaged defaults when omitted.
    max_gap : int
        Longest occlusion gap (frames) filled by linear interpolation.
    fill : bool
        Whether to gap-fill before mapping.
    """

    def __init__(self, config=None, config_path=None, hand_model_path=None,
                 max_gap=10, fill=True):
        self.config = config
        self.config_path = config_path
        self.hand_model_path = hand_model_path
        self.max_gap = max_gap
        self.fill = fill

    def fit(self, X=None, y=None):
        if self.config is not None:
            if not isinstance(self.config, RecordConfig):
                raise TypeError("config must be a RecordConfig")
            self.config_ = self.config
        else:
            self.config_ = load_record_config(self.config_path, self.hand_model_path)
        return self

    def transform(self, X: MarkerSequence):
        """Map a MarkerSequence to a list of (timestamp, HandState)."""
        self._check_fitted("config_")
        if not isinstance(X, MarkerSequence):
            raise TypeError(f"expected a MarkerSequence, got {type(X).__name__}")
        seq = fill_gaps(X, self.max_gap) if self.fill else X
        return record_sequence(seq, self.config_)

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class EmbodimentMapping(_ParamsMixin):
    """Hand-model state trajectories to robot command trajectories.

    Parameters
    ----------
    config : EmbodimentConfig, optional
        Fully built config; takes precedence over the other parameters.
    hand : str, optional
        Builtin hand name or config path (identity base calibration).
    config_path : str, optional
        Embodiment YAML location.
    shape_config, hand_model_path : optional
        Record config (or its path) supplying the hand-model shape; packaged
        defaults when omitted.
    """

    def __init__(self, config=None, hand=None, config_path=None,
                 shape_config=None, hand_model_path=None):
        self.config = config
        self.hand = hand
        self.config_path = config_path
        self.shape_config = shape_config
        self.hand_model_path = hand_model_path

    def fit(self, X=None, y=None):
        if self.config is not None:
            if not isinstance(self.config, EmbodimentConfig):
                raise TypeError("config must be an EmbodimentConfig")
            self.config_ = self.config
        else:
            self.config_ = load_embodiment_config(self.config_path, self.hand)
        if isinstance(self.shape_config, RecordConfig):
            self.shape_ = self.shape_config.shape
        else:
            self.shape_ = load_record_config(self.shape_config,
                                             self.hand_model_path).shape
        return self

    def transform(self, X):
        """Map [(timestamp, HandState)] to a list of RobotCommand."""
        self._check_fitted("config_")
        return embody_trajectory(X, self.shape_, self.config_)

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)
