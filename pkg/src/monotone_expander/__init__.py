"""Explicit monotone expanders from the Mobius action of SL2(Q)."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .sl2 import INF, IDENTITY, Mat2, det4, dist_sq, flip, inner4, mat_inv, mat_mul, mobius_apply, mobius_derivative, trace
from .words import Word, build_W, concat_reduce, enumerate_reduced, freeness_certificate, kesten_return_prob, word_eval
from .forge import ForgeConfig, GeneratorSet, forge, seed_pair, verify_properties
from .family import Interval, IntervalSet, MapFamily, apply_family, balance_test, build_family, expansion_ratio, sup_deviation
from .discretize import LayeredBipartiteGraph, dimension_matrices, discretize, export, monotone_decompose
from .expansion import continuous_corpus_test, spectral_gap, subspace_dimension_test, vertex_expansion_exact
