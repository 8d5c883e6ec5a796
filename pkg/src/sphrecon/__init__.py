"""Reconstruction of band-limited fields on the sphere from masked harmonic coefficients."""
from .estimator import EstimatorConfig, grid_search_nu, postprocess, reconstruct, theoretical_mse
from .field import NoiseModel, PowerSpectrum, Seed, paper_spectrum, sample_field, sample_noise
from .harmonics import HarmonicCoeffs, SphereGrid, analyze, make_grid, synthesize
from .mask import AxialMaskSpec, MaskCoeffs, mask_coeffs
from .operator import MaskOperatorBlock, build_axial_block, build_axial_blocks, build_general
from .wigner import gaunt, wigner3j

__all__ = [
    "EstimatorConfig", "grid_search_nu", "postprocess", "reconstruct", "theoretical_mse",
    "NoiseModel", "PowerSpectrum", "Seed", "paper_spectrum", "sample_field", "sample_noise",
    "HarmonicCoeffs", "SphereGrid", "analyze", "make_grid", "synthesize",
    "AxialMaskSpec", "MaskCoeffs", "mask_coeffs",
    "MaskOperatorBlock", "build_axial_block", "build_axial_blocks", "build_general",
    "gaunt", "wigner3j",
]

__version__ = "0.1.0"
