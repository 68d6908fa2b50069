from .json_utils import convert_numpy_to_builtin
from .model_utils import CachedArraysModel

__all__ = ["convert_numpy_to_builtin", "CachedArraysModel"]
