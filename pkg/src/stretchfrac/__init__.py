"""Stretched p.c.f. fractals: graph approximations, harmonic structures, spectra and dimensions."""
from .dims import (
    ExcludedCase,
    diameter_scan,
    euclid_hausdorff,
    hausdorff_resistance,
    relation_check,
    spectral_dimension,
)
from .graph import StretchedGraph, build_level, export_graph
from .harmonic import (
    Constant,
    HarmonicSequence,
    Infeasible,
    Perturbed,
    closed_form,
    discover,
    kappa_bounds,
    make_sequence,
    residual,
    solve_rho,
)
from .measure import MeasureSpec, cell_measure, vertex_masses
from .netalg import ResistorNetwork, effective_resistance, harmonic_extension, network_energy, trace_to
from .spectral import assemble, bracketing_check, counting, eigenvalues, fit_exponent
from .templates import FractalTemplate, builtin, load_template, resolve, save_template, validate_template

__version__ = "0.1.0"
