from .report import (
    CheckConfig,
    CheckReport,
    REGISTRY,
    list_checks,
    run_check,
    run_suite,
)

__all__ = ["CheckConfig", "CheckReport", "REGISTRY", "list_checks",
           "run_check", "run_suite"]
