"""Labeled square matrices as CSV (station header row and label column)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError


def write_labeled_csv(labels, values: np.ndarray, path, fmt: str = "%.6f") -> None:
    labels = list(labels)
    with open(path, "w", newline="") as fh:
        fh.write("station," + ",".join(labels) + "\n")
        for lab, row in zip(labels, values):
            fh.write(lab + "," + ",".join(fmt % v for v in row) + "\n")


def read_labeled_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"matrix file not found: {path}")
    df = pd.read_csv(path, index_col=0)
    labels = [str(c) for c in df.columns]
    if [str(i) for i in df.index] != labels:
        raise DataError(f"{path}: row labels do not match column labels")
    return labels, df.to_numpy(dtype=float)
