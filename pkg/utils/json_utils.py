import collections.abc
import math

import numpy as np


def convert_numpy_to_builtin(obj):
    """
    Recursively convert numpy scalars and arrays in a dictionary or list to plain
    Python values; non-finite floats become None so the result is strict JSON.
    """
    if isinstance(obj, np.ndarray):
        return convert_numpy_to_builtin(obj.tolist())
    elif isinstance(obj, np.generic):
        return convert_numpy_to_builtin(obj.item())
    elif isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    elif isinstance(obj, collections.abc.Mapping):
        return {k: convert_numpy_to_builtin(v) for k, v in obj.items()}
    elif isinstance(obj, collections.abc.Sequence) and not isinstance(obj, (str, bytes)):
        return [convert_numpy_to_builtin(elem) for elem in obj]
    else:
        return obj
