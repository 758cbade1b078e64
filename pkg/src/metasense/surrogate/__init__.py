"""Sampling, labeling, forward surrogate training and inverse design."""

from .dataset import BDPLabeler, Dataset, generate_dataset, label_geometry
from .estimator import SurrogateRegressor
from .inverse import InverseConfig, InverseResult, inverse_design
from .sampling import GEOMETRY_BOUNDS_MM, lhs_sample

__all__ = ["BDPLabeler", "Dataset", "generate_dataset", "label_geometry",
           "SurrogateRegressor", "InverseConfig", "InverseResult",
           "inverse_design", "GEOMETRY_BOUNDS_MM", "lhs_sample"]
