from .model_core import Dataset, RngSeed, Theta, classify, linear_index, load_csv, rescaled_slope, write_csv

__all__ = ['Dataset', 'Theta', 'RngSeed', 'load_csv', 'write_csv', 'classify', 'linear_index', 'rescaled_slope']
