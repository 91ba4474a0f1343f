import pytest

from tubemesh.fancnn import PatchCorpus
from tubemesh.phantom import LesionSpec, PhantomSpec, generate


def lesion_phantom(seed: int = 0, length: float = 20.0) -> PhantomSpec:
    """One artery with a CP, an NCP and a mixed lesion separated by healthy segments."""
    return PhantomSpec(
        length=length,
        radius_start=1.6,
        radius_end=1.5,
        seed=seed,
        lesions=[
            LesionSpec(kind="CP", z_center=4.0, z_length=3.0, arc_degrees=120, stenosis=0.2),
            LesionSpec(kind="NCP", z_center=10.0, z_length=3.0, theta_center=2.0, arc_degrees=150, stenosis=0.3),
            LesionSpec(kind="mixed", z_center=16.0, z_length=3.0, arc_degrees=360, stenosis=0.4),
        ],
    )


@pytest.fixture(scope="module")
def corpus() -> PatchCorpus:
    arteries = []
    for seed in range(2):
        mpr, truth = generate(lesion_phantom(seed))
        arteries.append((mpr, truth.field))
    return PatchCorpus(arteries)
