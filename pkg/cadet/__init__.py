"""
cadet: conditional anomaly detection for patient-management decisions.

An SVM trained on (patient state, decision) pairs gives a signed margin
d(y|x) for every observed decision; decisions whose margin falls below a
calibrated threshold are flagged as unusual for the patient's condition.
"""

__version__ = "0.1.0"
