from .binary import read_mpr, read_obj, write_mpr, write_obj
from .frames import get_missing_columns, reorder_columns, require_columns
from .tables import (
    read_areas_csv,
    read_field_csv,
    read_patient_signals,
    write_areas_csv,
    write_field_csv,
    write_patient_signals,
)
