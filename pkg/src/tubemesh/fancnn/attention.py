import numpy as np

from tubemesh.fancnn.model import FanCnnOutput
from tubemesh.geometry.lesions import label_components
from tubemesh.geometry.types import CLASS_CP, CLASS_MIXED, CLASS_NCP, RadialField

# classes under which each plaque shell survives
_KEEPS = {
    "CP": (CLASS_CP, CLASS_MIXED),
    "NCP": (CLASS_NCP, CLASS_MIXED),
}


def component_votes(labels: np.ndarray, count: int, classes: np.ndarray, n_classes: int = 4) -> np.ndarray:
    """
    Majority argmax class of every component; ties go to the lower class.

    Returns an array of length ``count + 1`` indexed by component id.
    """
    votes = np.zeros(count + 1, dtype=np.int64)
    if count == 0:
        return votes
    members = labels > 0
    tally = np.zeros((count + 1, n_classes), dtype=np.int64)
    np.add.at(tally, (labels[members], classes[members]), 1)
    votes[1:] = tally[1:].argmax(axis=1)
    return votes


def classifier_attention(output: FanCnnOutput, min_radius: float = 0.15, dz: float = 0.5) -> RadialField:
    """
    Turn raw network output into a radial field, letting the classifier
    decide which regressed plaque survives.

    Radii are clamped at zero. Per plaque shell, vertices with radius of at
    least ``min_radius`` form 4-connected components (θ wraps); every
    component takes the majority argmax class of its vertices and keeps its
    radii only when that class contains its plaque type (CP or mixed for the
    CP shell, NCP or mixed for the NCP shell). Vertices below
    ``min_radius`` keep their radii. The field's ``plaque_class`` is the
    per-vertex argmax class.
    """
    radii = np.maximum(output.radii, 0.0)
    classes = output.classes
    shells = {"CP": radii[1].copy(), "NCP": radii[2].copy()}
    for kind, shell in shells.items():
        labels, count = label_components(radii[1 if kind == "CP" else 2] >= min_radius)
        votes = component_votes(labels, count, classes, output.class_probs.shape[0])
        rejected = ~np.isin(votes, _KEEPS[kind])
        rejected[0] = False
        shell[rejected[labels]] = 0.0
    return RadialField(r_l=radii[0], r_cp=shells["CP"], r_ncp=shells["NCP"], plaque_class=classes, dz=dz)
