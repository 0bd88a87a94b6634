"""Residual correlation diagnostics for admixture and PCA fits."""

from ._core import (
    ContractError,
    DataError,
    DegenerateError,
    Error,
    eig_sym,
    fit,
    heterozygosity,
    num_threads,
    project_from_pi,
    project_from_q,
    project_null,
    project_pca1,
    project_pca2,
    project_pca3,
    read_bed,
    set_num_threads,
    simulate,
    write_bed,
)

__all__ = [
    "ContractError",
    "DataError",
    "DegenerateError",
    "Error",
    "eig_sym",
    "fit",
    "heterozygosity",
    "num_threads",
    "project_from_pi",
    "project_from_q",
    "project_null",
    "project_pca1",
    "project_pca2",
    "project_pca3",
    "read_bed",
    "set_num_threads",
    "simulate",
    "write_bed",
]
