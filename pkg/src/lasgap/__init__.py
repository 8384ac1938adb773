"""Lasserre/SoS relaxations of 0/1 programs at levels n-1 and n."""

from .certify import (
    CertReport,
    GapCertificate,
    Infeasible,
    certify_ilp,
    certify_unconstrained,
    gap_precondition_ilp,
    integral_optimum,
    is_svc,
    no_gap_precheck,
    search_unconstrained_certificate,
    top_fourier,
)
from .lattice import LatticeVector, Repr, enumerate_subsets, mobius, zeta
from .moment import (
    CornerForm,
    Instance,
    LinearForm,
    MultilinearPoly,
    lasserre_check,
    moment_matrix,
    shift,
)
from .speig import dense_min_eigenvalue, eigenvalues_dpr1, min_eigenvalue_dpr1, psd_corner

__all__ = [
    "CertReport",
    "CornerForm",
    "GapCertificate",
    "Infeasible",
    "Instance",
    "LatticeVector",
    "LinearForm",
    "MultilinearPoly",
    "Repr",
    "certify_ilp",
    "certify_unconstrained",
    "dense_min_eigenvalue",
    "eigenvalues_dpr1",
    "enumerate_subsets",
    "gap_precondition_ilp",
    "integral_optimum",
    "is_svc",
    "lasserre_check",
    "min_eigenvalue_dpr1",
    "mobius",
    "moment_matrix",
    "no_gap_precheck",
    "psd_corner",
    "search_unconstrained_certificate",
    "shift",
    "top_fourier",
    "zeta",
]

__version__ = "0.1.0"
