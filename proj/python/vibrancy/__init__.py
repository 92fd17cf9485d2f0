"""Neighborhood vibrancy and crime analysis toolkit.

Thin Python layer over the C++ core: GLM fits (OLS, logistic, Poisson, NB2),
propensity-score matching with paired inference, point-in-polygon spatial
joins, per-neighborhood trend classification and the synthetic-city
generator.
"""

from vibrancy._core import (
    VibrancyError,
    assign_points,
    classify_crime,
    classify_event,
    discordant_odds_ratio,
    fit_logistic,
    fit_negbin,
    fit_ols,
    fit_poisson,
    fit_yearly_trend,
    generate_city,
    match_pairs,
    paired_inference,
    run,
    wilcoxon_signed_rank_p,
)

__all__ = [
    "VibrancyError",
    "assign_points",
    "classify_crime",
    "classify_event",
    "discordant_odds_ratio",
    "fit_logistic",
    "fit_negbin",
    "fit_ols",
    "fit_poisson",
    "fit_yearly_trend",
    "generate_city",
    "match_pairs",
    "paired_inference",
    "run",
    "wilcoxon_signed_rank_p",
]

__version__ = "0.1.0"
