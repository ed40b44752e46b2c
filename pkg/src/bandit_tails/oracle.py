"""Exact laws of pull counts on tiny problems, by enumerating reward paths.

Only rewards the policy actually consumes branch the tree, so a Dirac arm
never branches and a Bernoulli arm branches in two. Realized regret would
also need the best arm's counterfactual stream; expected regret equals the
expected pseudo-regret, so only the latter is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

from .env import Environment, UniformInterval
from .policies import UCBH, PolicyConfig, PolicyState, select_arm

MAX_HORIZON = 12
MAX_SUPPORT = 3
DEFAULT_BUDGET = 10**7


class OracleBudgetError(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs up to {required} paths, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class ExactLaw:
    pmf: dict[tuple[int, ...], float]
    expected_pseudo_regret: float
    paths: int
    total_probability: float

    def marginal(self, arm: int) -> dict[int, float]:
        out: dict[int, float] = {}
        for counts, p in self.pmf.items():
            out[counts[arm]] = out.get(counts[arm], 0.0) + p
        return out


def _clone(state: PolicyState) -> PolicyState:
    return PolicyState(
        state.n_arms,
        keep_obs=state.keep_obs,
        counts=list(state.counts),
        sums=list(state.sums),
        obs=[list(o) for o in state.obs],
        first_obs=list(state.first_obs),
        active=state.active,
    )


def exact_distribution(
    env: Environment,
    config: PolicyConfig,
    n: int,
    budget: int = DEFAULT_BUDGET,
    reverse: bool = False,
) -> ExactLaw:
    """Exact law of (T_1(n), ..., T_K(n)) and the exact expected pseudo-regret.

    ``reverse`` enumerates each arm's support in reverse order, which must
    not change the result beyond rounding.
    """
    if not env.n_arms <= n <= MAX_HORIZON:
        raise ValueError(f"horizon must lie in [{env.n_arms}, {MAX_HORIZON}], got {n}")
    supports = []
    for d in env.arms:
        if isinstance(d, UniformInterval):
            raise ValueError("continuous arms cannot be enumerated")
        atoms = list(d.atoms())
        if len(atoms) > MAX_SUPPORT:
            raise ValueError(f"support of {d} exceeds {MAX_SUPPORT} points")
        supports.append(atoms[::-1] if reverse else atoms)
    worst = max(len(s) for s in supports) ** n
    if isinstance(config, UCBH):
        config = config if config.horizon is not None else config.with_horizon(n)

    gaps = env.gap_info().gaps
    pmf: dict[tuple[int, ...], float] = {}
    tally = {"paths": 0, "mass": 0.0, "regret": 0.0}

    def visit(state: PolicyState, prob: float, t: int) -> None:
        if t > n:
            tally["paths"] += 1
            if tally["paths"] > budget:
                raise OracleBudgetError(worst, budget)
            key = tuple(state.counts)
            pmf[key] = pmf.get(key, 0.0) + prob
            tally["mass"] += prob
            ps = 0.0
            for k in range(env.n_arms):
                ps += gaps[k] * state.counts[k]
            tally["regret"] += prob * ps
            return
        a = select_arm(state, config)
        branches = supports[a]
        for i, (x, w) in enumerate(branches):
            child = state if i == len(branches) - 1 else _clone(state)
            child.update(a, x)
            visit(child, prob * w, t + 1)

    visit(PolicyState.for_config(env.n_arms, config), 1.0, 1)
    return ExactLaw(pmf, tally["regret"], tally["paths"], tally["mass"])
