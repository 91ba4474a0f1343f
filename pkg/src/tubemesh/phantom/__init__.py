from .corpus import (
    PhantomCorpusConfig,
    allocate_grades,
    generate_corpus,
    generate_patients,
    load_artery,
    load_corpus,
    parse_grade_mix,
    read_manifest,
    read_truth,
    sample_patient,
    sample_spec,
    write_truth,
)
from .generate import analytic_field, generate, lumen_area_ratio, narrowing_depth, truth_of
from .grading import reference_area, stenosis_from_areas, stenosis_profile, stenosis_to_grade
from .spec import HuPalette, LesionSpec, PhantomSpec, PhantomTruth
