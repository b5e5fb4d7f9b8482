# src/helpers/yaml.py
import yaml
import numpy as np

from collections import OrderedDict
from typing import Any, TextIO


def represent_ordereddict(self, data):
    return self.represent_mapping('tag:yaml.org,2002:map', data.items())


def represent_numpy_float(self, data):
    return self.represent_float(float(data))


def represent_numpy_int(self, data):
    return self.represent_int(int(data))


class OrderedDictDumper(yaml.SafeDumper):
    """
    Safe dumper that keeps mapping order and accepts numpy scalars, so run
    configurations and metadata written back to disk keep their layout.
    """
    def __init__(self, *args, **kwargs):
        yaml.SafeDumper.__init__(self, *args, **kwargs)
        self.add_representer(OrderedDict, type(self).represent_ordereddict)
        self.add_representer(np.float64, type(self).represent_numpy_float)
        self.add_representer(np.float32, type(self).represent_numpy_float)
        self.add_representer(np.int64, type(self).represent_numpy_int)
        self.add_representer(np.int32, type(self).represent_numpy_int)

    represent_ordereddict = represent_ordereddict
    represent_numpy_float = represent_numpy_float
    represent_numpy_int = represent_numpy_int


def dump_yaml(data: Any, stream: TextIO):
    yaml.dump(
        data,
        stream,
        Dumper=OrderedDictDumper,
        indent=2,
        default_flow_style=False,
        sort_keys=False
    )
