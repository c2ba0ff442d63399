"""
The monitoring pipeline: ingest FRED prices, fit the models, report PELCoV thresholds.
"""
