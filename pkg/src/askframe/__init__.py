"""Decoupled dialogue response generation with ask/framing plans."""

from askframe.plans import (
    MalformedPlan,
    Plan,
    PlanElement,
    PlanType,
    parse_plan,
    plan_similarity,
    plan_tokens,
    serialize_plan,
)

__all__ = [
    "MalformedPlan",
    "Plan",
    "PlanElement",
    "PlanType",
    "parse_plan",
    "plan_similarity",
    "plan_tokens",
    "serialize_plan",
]

__version__ = "0.1.0"
