from ._core import (
    Design,
    Error,
    EvidenceFunction,
    Problem,
    appendix_b,
    box_hill,
    d_criterion,
    expected_test_info,
    link_problem,
    linear_problem,
    log_bayes_factor,
    observed_test_info,
    simulate,
    tk_closed_form,
)

__all__ = [
    "Design",
    "Error",
    "EvidenceFunction",
    "Problem",
    "appendix_b",
    "box_hill",
    "d_criterion",
    "expected_test_info",
    "link_problem",
    "linear_problem",
    "log_bayes_factor",
    "observed_test_info",
    "simulate",
    "tk_closed_form",
]
