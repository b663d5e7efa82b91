""" Gridless sparse coding and continuous dictionary learning for point clouds """
import logging
import os

from contdict.exceptions import *  # NOQA
from contdict.cloud_io import PointCloud, NoiseSpec, read_cloud, write_cloud, synth_cloud, add_noise  # NOQA
from contdict.geometry import Frame, Patch, CloudIndex, neighbors, fit_frame, extract_patch  # NOQA
from contdict.geometry import patch_to_world, select_patch_centers  # NOQA
from contdict.basis import BasisSpec, Dictionary, eval_basis, sample_dictionary, eval_atom  # NOQA
from contdict.basis import reconstruct_signal, normalize_atoms, cosine_dictionary  # NOQA
from contdict.basis import read_dictionary, write_dictionary  # NOQA
from contdict.pursuit import SparseCode, PursuitParams, omp, relaxed_pursuit, code_patch  # NOQA
from contdict.dictlearn import TrainSet, LearnParams, LearnTrace, learn  # NOQA
from contdict.pipeline import DenoiseParams, DenoiseReport, denoise, chamfer_distance, rmse_to_surface  # NOQA

VERSION = '0.3.0'

log = logging.getLogger(__name__)

if os.environ.get("DEBUG_CONTDICT"):
    log.setLevel(logging.DEBUG)
    if len(log.handlers) == 0:
        log.addHandler(logging.StreamHandler())
log.addHandler(logging.NullHandler())
