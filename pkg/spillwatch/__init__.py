"""Probability-equivalent CoVaR/VaR levels for Student-t copulas and a spillover monitor."""
