from . import columns
