"""Correlated attribute pattern mining for gridded sensor data."""

from .ingest import Dataset, Sensor, TimeGrid, UploadSession, assemble_dataset, chunk_file
from .miner import (
    Cap,
    MiningParams,
    MiningResult,
    brute_force_mine,
    mine,
    params_from_dict,
)
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "Cap",
    "Dataset",
    "MiningParams",
    "MiningResult",
    "Sensor",
    "Store",
    "TimeGrid",
    "UploadSession",
    "assemble_dataset",
    "brute_force_mine",
    "chunk_file",
    "mine",
    "params_from_dict",
    "__version__",
]
