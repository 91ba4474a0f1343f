import numpy as np

from tubemesh.nn import Tensor
from tubemesh.nn import functional as F


def _plaque_term(pred: Tensor, target: np.ndarray) -> Tensor:
    """
    Mean absolute error over the vertices that carry this plaque plus the
    mean predicted magnitude over those that do not; an empty side drops out.
    """
    present = target > 0
    term = Tensor(0.0)
    n_present = int(present.sum())
    n_absent = present.size - n_present
    if n_present:
        term = term + ((pred - target).abs() * present).sum() / n_present
    if n_absent:
        term = term + (pred.abs() * ~present).sum() / n_absent
    return term


def fancnn_loss(
    radii: Tensor,
    logits: Tensor,
    target_radii: np.ndarray,
    target_class: np.ndarray,
) -> tuple[Tensor, dict[str, float]]:
    """
    Composite loss: categorical cross-entropy of the plaque classes, squared
    lumen-radius error and the two plaque terms.

    Parameters
    ----------
    radii : Tensor
        Predicted (r_l, r_cp, r_ncp), shape ``(B, 3, N_θ, L)``.
    logits : Tensor
        Class scores, shape ``(B, 4, N_θ, L)``.
    target_radii : np.ndarray
        True radii in the same layout as ``radii``.
    target_class : np.ndarray
        Class index per site, shape ``(B, N_θ, L)``.

    Returns
    -------
    tuple[Tensor, dict[str, float]]
        The total loss and the value of every term.
    """
    target_class = np.asarray(target_class, dtype=np.int64)
    if target_class.min(initial=0) < 0 or target_class.max(initial=0) >= logits.shape[1]:
        raise ValueError(f"class labels must lie in [0, {logits.shape[1] - 1}]")
    one_hot = np.moveaxis(np.eye(logits.shape[1])[target_class], -1, 1)
    n_sites = target_class.size

    cls = -(F.log_softmax(logits, axis=1) * one_hot).sum() / n_sites
    lumen = ((radii[:, 0] - target_radii[:, 0]) ** 2).mean()
    cp = _plaque_term(radii[:, 1], target_radii[:, 1])
    ncp = _plaque_term(radii[:, 2], target_radii[:, 2])
    total = cls + lumen + cp + ncp
    terms = {"cls": cls.item(), "lumen": lumen.item(), "cp": cp.item(), "ncp": ncp.item(), "total": total.item()}
    return total, terms
