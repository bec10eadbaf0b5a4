import numpy as np
import pytest

from clinpred.data import ColumnSpec, Dataset, generate_synthetic_cohort, split_train_test


@pytest.fixture(scope="session")
def cohort():
    return generate_synthetic_cohort(1500, 7)


@pytest.fixture(scope="session")
def split(cohort):
    return split_train_test(cohort, 0.8, 7)


def make_dataset(X, y, kinds=None, mode="classification", names=None):
    """Feature matrix plus outcome as a Dataset; NaN cells are missing."""
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    kinds = kinds or ["continuous"] * p
    names = names or [f"x{j}" for j in range(p)]
    specs = [ColumnSpec(n, k) for n, k in zip(names, kinds)]
    specs.append(ColumnSpec("y", "binary" if mode == "classification" else "continuous", role="outcome"))
    return Dataset(tuple(specs), np.column_stack([X, y]), endpoint_mode=mode)
