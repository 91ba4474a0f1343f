"""Coronary lumen and plaque meshes, plaque quantification and CAD-RADS grading."""
