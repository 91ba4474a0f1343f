import numpy as np


def kfold_indices(count: int, folds: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Shuffled k-fold split of ``count`` items into (train, test) index pairs.

    Test folds are disjoint, cover every item once and differ in size by at
    most one.

    Example:
        >>> [len(test) for _, test in kfold_indices(10, 3)]
        [4, 3, 3]
    """
    if not 2 <= folds <= count:
        raise ValueError(f"need 2 <= folds <= count, got folds={folds} for {count} items")
    order = np.random.default_rng(seed).permutation(count)
    splits = []
    for test in np.array_split(order, folds):
        train = np.setdiff1d(order, test)
        splits.append((train, np.sort(test)))
    return splits


def fold_split(count: int, folds: int, fold: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """The (train, test) indices of one fold of :func:`kfold_indices`."""
    if not 0 <= fold < folds:
        raise ValueError(f"fold {fold} is out of range for {folds} folds")
    return kfold_indices(count, folds, seed)[fold]
