"""Message-update-rule registry and the concrete rules for every node kind.

Importing this package registers all built-in node kinds, rules, joint-
marginal rules, and average-energy terms.
"""

from . import discrete, gaussian, gcv, linear_gaussian  # noqa: F401  (registration)
from .discrete import dirichlet_posterior
from .gcv import DEFAULT_GH_POINTS, VolatilityMessage
from .parts import NodeParts
from .registry import (
    MARGINALIZATION,
    MOMENT_MATCHING,
    RuleKey,
    describe_missing,
    energy_fn,
    has_any_rule,
    joint_rule,
    lookup,
    register_energy,
    register_joint_rule,
    register_rule,
)

__all__ = [
    "MARGINALIZATION",
    "MOMENT_MATCHING",
    "RuleKey",
    "NodeParts",
    "VolatilityMessage",
    "DEFAULT_GH_POINTS",
    "describe_missing",
    "dirichlet_posterior",
    "energy_fn",
    "has_any_rule",
    "joint_rule",
    "lookup",
    "register_energy",
    "register_joint_rule",
    "register_rule",
]
