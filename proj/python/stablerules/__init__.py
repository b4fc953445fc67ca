"""Decorrelation-weighted rule learning: stable prediction under linear and
nonlinear confounding, with association rules as interpretable features."""

from ._core import (
    LinearModel,
    Rule,
    StableRulesError,
    beta_errors,
    bias_acceptance_probs,
    bias_subsample,
    build_rule_matrix,
    classification_metrics,
    correlation_profile,
    decor_penalty,
    fit_dwr,
    fit_linear_baseline,
    fit_weighted_svm,
    fit_weighted_svr,
    gen_covariates,
    gen_labels,
    learn_weights,
    mine_class_rules,
    mine_frequent_itemsets,
    noise_free_label,
    pearson,
    predict,
    predict_class,
    rmse,
    select_rules,
    spearman,
    stable_beta,
    standardize,
    weighted_poly_fit,
)

__all__ = [
    "LinearModel",
    "Rule",
    "StableRulesError",
    "beta_errors",
    "bias_acceptance_probs",
    "bias_subsample",
    "build_rule_matrix",
    "classification_metrics",
    "correlation_profile",
    "decor_penalty",
    "fit_dwr",
    "fit_linear_baseline",
    "fit_weighted_svm",
    "fit_weighted_svr",
    "gen_covariates",
    "gen_labels",
    "learn_weights",
    "mine_class_rules",
    "mine_frequent_itemsets",
    "noise_free_label",
    "pearson",
    "predict",
    "predict_class",
    "rmse",
    "select_rules",
    "spearman",
    "stable_beta",
    "standardize",
    "weighted_poly_fit",
]

__version__ = "0.1.0"
