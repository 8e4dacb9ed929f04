"""Parametric identification: ARX, subspace, order selection and conversions."""

from .arx import ArxModel, RegressionData, arx_identify, arx_predict
from .convert import (
    DiscreteTransferMatrix,
    arx_to_ss,
    arx_to_tf,
    d2c,
    frequency_response,
    minimal_order,
)
from .order import AicScore, aic_score, select_order
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .subspace import OrderAmbiguityWarning, UnstableModelWarning, subspace_identify

__all__ = [
    "ArxModel", "RegressionData", "arx_identify", "arx_predict",
    "DiscreteTransferMatrix", "arx_to_ss", "arx_to_tf", "d2c", "frequency_response", "minimal_order",
    "AicScore", "aic_score", "select_order",
    "load_model", "model_from_dict", "model_to_dict", "save_model",
    "OrderAmbiguityWarning", "UnstableModelWarning", "subspace_identify",
]
