"""Negative-dependence toolbox: exact DPP samplers and the methods built on them."""

from ._core import (
    KernelMatrix,
    NumericalError,
    __version__,
    brute_force_distribution,
    compare_pruning,
    css_expected_error,
    gaf_zeros,
    gauss_legendre,
    haar_unitary,
    i2,
    leverage_scores,
    load_kernel,
    occupation_distribution,
    projection_from_rows,
    projection_dpp_law,
    rbf_kernel,
    sample_kdpp,
    sample_projection,
    sample_spectral,
    save_kernel,
    spiked_sigma,
    stft_hermite_sup,
    verify,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
