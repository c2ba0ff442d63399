"""
Marginal models for the two return series.

Returns and descriptive statistics, the AR(1)/MA(1)-GARCH(1,1) filters and
fits, and the residual diagnostics that go with them.
"""
