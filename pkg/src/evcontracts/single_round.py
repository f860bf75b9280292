"""The single-round contract game.

The agent knows its type theta (evidence Z ~ N(theta, 1), null type 0),
faces a contract with trial cost C and market cap R, and picks the license
that maximizes its expected payout. Against the menu of all rescaled
e-values the argmax is known in closed form: the all-or-nothing license at
the one-sided Gaussian threshold with null hit probability C/R, so we
construct it directly instead of searching an infinite menu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .gaussian import GaussianModel, upper_tail_inverse
from .licenses import LicenseFn, Menu, constant_license, null_expectation

# The incentive-unaware baseline: pay the cap whenever the one-tailed test
# rejects at the fixed 5% level.
STATUS_QUO_LEVEL = 0.05


@dataclass(frozen=True)
class Contract:
    """A menu plus the trial cost C and the market cap R, with R > C > 0."""

    menu: Menu
    cost: float
    cap: float

    def __post_init__(self) -> None:
        if not (self.cap > self.cost > 0.0):
            raise ValueError(
                f"need cap > cost > 0, got cost={self.cost}, cap={self.cap}"
            )
        if self.menu.cost != self.cost:
            raise ValueError(
                f"menu cost {self.menu.cost} disagrees with contract cost {self.cost}"
            )


@dataclass(frozen=True)
class AgentDecision:
    opted_in: bool
    chosen_license: LicenseFn | None
    expected_profit: float

    def __post_init__(self) -> None:
        if not self.opted_in and (
            self.chosen_license is not None or self.expected_profit != 0.0
        ):
            raise ValueError("an opted-out agent has no license and zero profit")


def np_best_response(
    null_mean: float, alt_mean: float, cost: float, cap: float, sd: float = 1.0
) -> LicenseFn:
    """Payout-maximizing license against the menu of all rescaled e-values.

    The optimum for a simple-vs-simple Gaussian test is all-or-nothing:
    pay ``cap`` when z clears the threshold whose null tail mass is
    cost/cap, zero otherwise, so the null expectation is exactly
    min(cost, cap). With cost >= cap the constraint is slack and the
    constant license at the cap is optimal. ``sd`` scales the threshold for
    evidence that is an n-sample mean.
    """
    if alt_mean <= null_mean:
        raise ValueError(
            "one-sided best response needs alt_mean > null_mean, got "
            f"{alt_mean} <= {null_mean}"
        )
    if cost <= 0.0:
        raise ValueError(f"cost must be positive, got {cost}")
    if cost >= cap:
        return constant_license(cap)
    threshold = null_mean + sd * upper_tail_inverse(cost / cap)
    return LicenseFn([threshold], [0.0, cap])


def status_quo_license(cap: float) -> LicenseFn:
    """All-or-nothing license of the fixed 5%-level one-tailed test."""
    if cap < 0.0:
        raise ValueError(f"cap must be nonnegative, got {cap}")
    if cap == 0.0:
        return constant_license(0.0)
    return LicenseFn([upper_tail_inverse(STATUS_QUO_LEVEL)], [0.0, cap])


def expected_license(f: LicenseFn, model: GaussianModel) -> float:
    """E[f(Z)] for Z ~ model; exact tail arithmetic, any Gaussian model."""
    return null_expectation(f, model)


def agent_decide(theta: float, contract: Contract) -> AgentDecision:
    """Best response of a type-theta agent, with strict opt-in.

    The agent opts in only when the best expected profit is strictly
    positive; ties at zero mean opting out. For explicit menus ties in
    expected payout break toward the license with the smallest null
    expectation; the argmax is not otherwise unique.
    """
    menu = contract.menu
    if not menu.is_explicit:
        # The argmax over all rescaled e-values is the closed-form
        # all-or-nothing license; null and negative types never profit.
        if theta <= 0.0:
            return AgentDecision(False, None, 0.0)
        best = np_best_response(0.0, theta, contract.cost, contract.cap)
        profit = expected_license(best, GaussianModel(theta)) - contract.cost
        if profit > 0.0:
            return AgentDecision(True, best, profit)
        return AgentDecision(False, None, 0.0)

    model = GaussianModel(theta)
    null = GaussianModel(0.0)
    best_f = None
    best_value = -math.inf
    best_null = math.inf
    for f in menu.licenses:
        value = expected_license(f, model)
        tie_break = null_expectation(f, null)
        if value > best_value or (value == best_value and tie_break < best_null):
            best_f, best_value, best_null = f, value, tie_break
    if best_f is not None and best_value - contract.cost > 0.0:
        return AgentDecision(True, best_f, best_value - contract.cost)
    return AgentDecision(False, None, 0.0)


def posterior_null_share(
    null_rate: float, nonnull_rate: float, odds_null: float
) -> float:
    """Fraction of approvals that come from null products.

    ``odds_null`` is the prior ratio of null to nonnull candidates;
    the rates are the per-type approval probabilities.
    """
    if not (0.0 <= null_rate <= 1.0 and 0.0 <= nonnull_rate <= 1.0):
        raise ValueError("approval rates must lie in [0, 1]")
    if not odds_null > 0.0:
        raise ValueError(f"odds_null must be positive, got {odds_null}")
    mass = odds_null * null_rate + nonnull_rate
    if mass == 0.0:
        raise ZeroDivisionError("no approvals from either type: posterior undefined")
    return odds_null * null_rate / mass
