"""
Games, scoring, and the hierarchy bound computations.

A game is a rational payoff over (outcomes, settings) plus a distribution on
joint settings; its score on a behaviour p(x|a) is the linear functional
sum payoff(x,a) * p(a) * p(x|a).  Three bounds are computed per game:

* ``causal_bound``: maximum over deterministic adaptive causal strategies.
  A first party answers as a function of its own setting; conditioned on that
  setting the remaining parties recurse, with later parties free to use every
  earlier setting.  Convexity makes deterministic strategies optimal.
* ``dc_bound``: maximum over process functions combined with deterministic
  local interventions.  Linearity in mixtures and multilinearity in each
  party's intervention make this the exact bound for correlations realizable
  by mixtures of process functions.
* ``pc_bound_canonical``: exact LP maximum over all logically consistent
  environments with interventions pinned to the canonical family, on the
  enlarged scenario whose inputs are the outcome alphabets and whose outputs
  are the setting alphabets.  This is an inner bound on the unrestricted
  probabilistically-consistent value (interventions are not optimized).

Everything on the classical side is exact rational arithmetic; the ``dc``
search uses integer-scaled payoffs inside numpy kernels, so its arithmetic is
exact as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm, prod
from typing import Sequence

import numpy as np

from .consistency import (
    CANDIDATE_CAP,
    QuasiProcessFunction,
    _survey_cached,
    enumerate_output_choices,
    is_logically_consistent,
)
from .errors import CapExceeded, InvalidTable, ScenarioMismatch, SearchSpaceTooLarge
from .lp import (
    HULL_VERTEX_CAP,
    HullQuery,
    HullResult,
    LinearProgram,
    LpStatus,
    hull_membership,
    lp_solve,
)
from .scenario import (
    Correlation,
    DeterministicIntervention,
    QuasiProcess,
    Scenario,
    canonical_interventions,
    canonical_scenario,
    evaluate_correlation,
    flatten,
    make_scenario,
    universal_realization,
)

ZERO = Fraction(0)
ONE = Fraction(1)

DC_WORK_CAP = 20_000_000
DC_GRID_CAP = 1 << 22
DC_HGRID_CAP = 1 << 20


@dataclass(frozen=True)
class Game:
    """Payoff table over (x, a) and a distribution over joint settings.

    ``known_pc_bound`` optionally records an externally established upper
    bound on the unrestricted probabilistically-consistent value; the built-in
    games leave it unset, and :func:`classify` only uses it when present.
    """

    scenario: Scenario
    payoff: tuple[Fraction, ...]  # payoff[x_flat * n_settings + a_flat]
    setting_dist: tuple[Fraction, ...]
    name: str = ""
    known_pc_bound: Fraction | None = None

    def __post_init__(self) -> None:
        sc = self.scenario
        object.__setattr__(self, "payoff", tuple(Fraction(v) for v in self.payoff))
        object.__setattr__(self, "setting_dist", tuple(Fraction(v) for v in self.setting_dist))
        if len(self.payoff) != sc.n_outcomes * sc.n_settings:
            raise InvalidTable(
                f"payoff has {len(self.payoff)} entries, expected {sc.n_outcomes * sc.n_settings}"
            )
        if len(self.setting_dist) != sc.n_settings:
            raise InvalidTable("setting distribution length mismatch")
        if any(w < 0 for w in self.setting_dist):
            raise InvalidTable("setting distribution has a negative weight")
        if sum(self.setting_dist) != 1:
            raise InvalidTable("setting distribution must sum to 1")


def score(game: Game, corr) -> Fraction | float:
    """Linear score sum payoff * p(a) * p(x|a); exact on rational tables.

    Only the setting and outcome alphabets must match; input/output system
    sizes are irrelevant to scoring, which lets one game score both classical
    and process-matrix behaviours.  Float-valued tables give a float score.
    """
    sc = game.scenario
    other = corr.scenario
    if sc.settings != other.settings or sc.outcomes != other.outcomes:
        raise ScenarioMismatch("game and correlation alphabets differ")
    n_a = sc.n_settings
    total = ZERO
    for a_flat in range(n_a):
        weight = game.setting_dist[a_flat]
        if weight == 0:
            continue
        for x_flat in range(sc.n_outcomes):
            pay = game.payoff[x_flat * n_a + a_flat]
            if pay == 0:
                continue
            total = total + pay * weight * corr.table[x_flat * n_a + a_flat]
    return total


# ---------------------------------------------------------------------------
# built-in games and processes
# ---------------------------------------------------------------------------


def _uniform(n: int) -> tuple[Fraction, ...]:
    return (Fraction(1, n),) * n


def builtin_gynin() -> Game:
    """Tripartite guess-your-neighbour's-input-or-not game, uniform settings.

    Win when (x1, x2, x3) equals (a3, a1, a2) or its bitwise complement.
    """
    sc = make_scenario(3, 2, 2, 2, 2)
    n_a = sc.n_settings
    payoff = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, a in enumerate(sc.setting_tuples()):
        straight = (a[2], a[0], a[1])
        flipped = tuple(1 - v for v in straight)
        for x in (straight, flipped):
            payoff[flatten(x, sc.outcomes) * n_a + a_flat] = ONE
    return Game(sc, tuple(payoff), _uniform(n_a), name="gynin")


def builtin_gyni() -> Game:
    """Bipartite guess-your-neighbour's-input game: win iff x1 = a2 and x2 = a1."""
    sc = make_scenario(2, 2, 2, 2, 2)
    n_a = sc.n_settings
    payoff = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, a in enumerate(sc.setting_tuples()):
        payoff[flatten((a[1], a[0]), sc.outcomes) * n_a + a_flat] = ONE
    return Game(sc, tuple(payoff), _uniform(n_a), name="gyni")


def builtin_ocb() -> Game:
    """The two-party direction game with qubit systems in mind.

    Party 2's setting packs two bits, s = 2*b' + b.  When b' = 0 party 2 must
    guess party 1's setting (x2 = a1); when b' = 1 party 1 must guess b
    (x1 = b).  Settings are uniform.
    """
    sc = Scenario(settings=(2, 4), outcomes=(2, 2), inputs=(2, 2), outputs=(2, 4))
    n_a = sc.n_settings
    payoff = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, (a1, s) in enumerate(sc.setting_tuples()):
        b, b_prime = s % 2, s // 2
        for x_flat, (x1, x2) in enumerate(sc.outcome_tuples()):
            win = (x2 == a1) if b_prime == 0 else (x1 == b)
            if win:
                payoff[x_flat * n_a + a_flat] = ONE
    return Game(sc, tuple(payoff), _uniform(n_a), name="ocb")


def builtin_chsh() -> Game:
    """CHSH on the nonsignaling scenario with discarded (trivial) systems."""
    sc = make_scenario(2, 2, 2, 1, 1)
    n_a = sc.n_settings
    payoff = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, (a1, a2) in enumerate(sc.setting_tuples()):
        for x_flat, (x1, x2) in enumerate(sc.outcome_tuples()):
            if (x1 ^ x2) == (a1 & a2):
                payoff[x_flat * n_a + a_flat] = ONE
    return Game(sc, tuple(payoff), _uniform(n_a), name="chsh")


BUILTIN_GAMES = {
    "gynin": builtin_gynin,
    "gyni": builtin_gyni,
    "ocb": builtin_ocb,
    "chsh": builtin_chsh,
}


def builtin_game(name: str) -> Game:
    try:
        return BUILTIN_GAMES[name]()
    except KeyError:
        raise KeyError(f"unknown built-in game {name!r}; choose from {sorted(BUILTIN_GAMES)}")


def bfw_process() -> QuasiProcess:
    """The tripartite cyclic-copy/anticopy mixture, weight 1/2 each.

    Party k receives its cyclic predecessor's output, or all parties receive
    the complements; either branch alone is inconsistent, their even mixture
    is a classical process and wins the tripartite game perfectly under the
    canonical interventions.
    """
    sc = make_scenario(3, 2, 2, 2, 2)
    half = Fraction(1, 2)
    table = [ZERO] * (sc.n_inputs * sc.n_outputs)
    for o_flat, o in enumerate(sc.output_tuples()):
        straight = (o[2], o[0], o[1])
        flipped = tuple(1 - v for v in straight)
        table[flatten(straight, sc.inputs) * sc.n_outputs + o_flat] += half
        table[flatten(flipped, sc.inputs) * sc.n_outputs + o_flat] += half
    return QuasiProcess(sc, tuple(table))


def gynin_perfect_correlation() -> Correlation:
    """The behaviour that wins the tripartite game with certainty."""
    report = evaluate_correlation(bfw_process(), canonical_interventions(bfw_process().scenario))
    return report.to_correlation()


def gyni_perfect_correlation() -> Correlation:
    """Deterministic x1 = a2, x2 = a1 on the bipartite scenario."""
    sc = make_scenario(2, 2, 2, 2, 2)
    n_a = sc.n_settings
    table = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, a in enumerate(sc.setting_tuples()):
        table[flatten((a[1], a[0]), sc.outcomes) * n_a + a_flat] = ONE
    return Correlation(sc, tuple(table))


def pr_box_correlation() -> Correlation:
    """The nonsignaling box with x1 xor x2 = a1 and a2, uniform marginals."""
    sc = make_scenario(2, 2, 2, 1, 1)
    n_a = sc.n_settings
    half = Fraction(1, 2)
    table = [ZERO] * (sc.n_outcomes * n_a)
    for a_flat, (a1, a2) in enumerate(sc.setting_tuples()):
        for x_flat, (x1, x2) in enumerate(sc.outcome_tuples()):
            if (x1 ^ x2) == (a1 & a2):
                table[x_flat * n_a + a_flat] = half
    return Correlation(sc, tuple(table))


# ---------------------------------------------------------------------------
# causal bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CausalBoundResult:
    value: Fraction
    strategy: dict


def causal_bound(game: Game, state_cap: int = 500_000) -> CausalBoundResult:
    """Maximum score over deterministic adaptive definite-order strategies.

    The recursion picks a party to act next; its outcome may depend on its own
    setting and on all settings revealed so far, and the identity of the next
    party may depend on those settings as well (dynamic order).
    """
    sc = game.scenario
    n = sc.n_parties
    n_a = sc.n_settings
    unset = -1
    memo: dict[tuple, Fraction] = {}

    def completions_weight_payoff(partial_a: tuple[int, ...], partial_x: tuple[int, ...]) -> Fraction:
        a_flat = flatten(partial_a, sc.settings)
        x_flat = flatten(partial_x, sc.outcomes)
        return game.setting_dist[a_flat] * game.payoff[x_flat * n_a + a_flat]

    def best(mask: int, partial_a: tuple[int, ...], partial_x: tuple[int, ...]) -> Fraction:
        if mask == 0:
            return completions_weight_payoff(partial_a, partial_x)
        key = (mask, partial_a, partial_x)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if len(memo) > state_cap:
            raise SearchSpaceTooLarge(f"causal recursion exceeds {state_cap} states")
        value: Fraction | None = None
        for k in range(n):
            if not mask & (1 << k):
                continue
            total = ZERO
            for a_k in range(sc.settings[k]):
                next_a = partial_a[:k] + (a_k,) + partial_a[k + 1 :]
                branch: Fraction | None = None
                for x_k in range(sc.outcomes[k]):
                    next_x = partial_x[:k] + (x_k,) + partial_x[k + 1 :]
                    candidate = best(mask & ~(1 << k), next_a, next_x)
                    if branch is None or candidate > branch:
                        branch = candidate
                total += branch
            if value is None or total > value:
                value = total
        memo[key] = value
        return value

    def rebuild(mask: int, partial_a: tuple[int, ...], partial_x: tuple[int, ...]) -> dict | None:
        if mask == 0:
            return None
        target = best(mask, partial_a, partial_x)
        for k in range(n):
            if not mask & (1 << k):
                continue
            total = ZERO
            chosen = []
            for a_k in range(sc.settings[k]):
                next_a = partial_a[:k] + (a_k,) + partial_a[k + 1 :]
                branch: Fraction | None = None
                branch_x = 0
                for x_k in range(sc.outcomes[k]):
                    next_x = partial_x[:k] + (x_k,) + partial_x[k + 1 :]
                    candidate = best(mask & ~(1 << k), next_a, next_x)
                    if branch is None or candidate > branch:
                        branch, branch_x = candidate, x_k
                total += branch
                chosen.append((a_k, branch_x))
            if total == target:
                branches = []
                for a_k, x_k in chosen:
                    next_a = partial_a[:k] + (a_k,) + partial_a[k + 1 :]
                    next_x = partial_x[:k] + (x_k,) + partial_x[k + 1 :]
                    branches.append(
                        {
                            "setting": a_k,
                            "outcome": x_k,
                            "then": rebuild(mask & ~(1 << k), next_a, next_x),
                        }
                    )
                return {"party": k, "branches": branches}
        raise AssertionError("causal strategy reconstruction lost the optimum")

    start_a = (unset,) * n
    start_x = (unset,) * n

    # flatten() rejects the unset marker, so leaves only see full assignments.
    full_mask = (1 << n) - 1
    value = best(full_mask, start_a, start_x)
    strategy = rebuild(full_mask, start_a, start_x)
    return CausalBoundResult(value, strategy)


# ---------------------------------------------------------------------------
# deterministic-consistency (process-function) bound
# ---------------------------------------------------------------------------


def _strides(cards: Sequence[int]) -> list[int]:
    out = [1] * len(cards)
    for k in range(len(cards) - 2, -1, -1):
        out[k] = out[k + 1] * cards[k + 1]
    return out


def _scaled_weighted_payoff(game: Game) -> tuple[np.ndarray, int]:
    """Integer matrix G[a, x] = payoff * p(a) * scale with the common denominator."""
    sc = game.scenario
    n_a, n_x = sc.n_settings, sc.n_outcomes
    weighted = []
    denom = 1
    for a_flat in range(n_a):
        w = game.setting_dist[a_flat]
        for x_flat in range(n_x):
            v = game.payoff[x_flat * n_a + a_flat] * w
            weighted.append(v)
            denom = lcm(denom, v.denominator)
    ints = [int(v * denom) for v in weighted]
    peak = max((abs(v) for v in ints), default=0)
    if peak * max(n_a, 1) >= 2**62:
        raise SearchSpaceTooLarge("scaled payoff would overflow 64-bit accumulation")
    return np.array(ints, dtype=np.int64).reshape(n_a, n_x), denom


def _choice_classes(fp_nd: np.ndarray, axis: int):
    """Group one party's output choices that induce identical fixed-point slices.

    Returns (reps, class_of): representative choice indices in ascending order
    and the map from choice index to class id.
    """
    moved = np.moveaxis(fp_nd, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    _, first_idx, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    reps = first_idx[order]
    class_of = rank[inverse.reshape(-1)]
    return reps.astype(np.int64), class_of.astype(np.int64)


@dataclass(frozen=True)
class DcBoundResult:
    value: Fraction
    witness_function: QuasiProcessFunction
    witness_intervention: DeterministicIntervention
    functions_searched: int


class _DcSearch:
    """Shared machinery for the process-function bound and vertex collection."""

    def __init__(self, scenario: Scenario, reduced: bool, candidate_cap: int):
        self.sc = scenario
        self.survey = _survey_cached(scenario, reduced, candidate_cap)
        self.n = scenario.n_parties
        self.setting_tuples = list(scenario.setting_tuples())
        self.n_a = scenario.n_settings
        self.choices = [
            list(itertools.product(range(scenario.outputs[k]), repeat=scenario.inputs[k]))
            for k in range(self.n)
        ]
        self.F = [len(c) for c in self.choices]
        self.in_strides = _strides(scenario.inputs)
        self.x_strides = _strides(scenario.outcomes)
        self.ncells = [scenario.settings[k] * scenario.inputs[k] for k in range(self.n)]
        self.H = [scenario.outcomes[k] ** self.ncells[k] for k in range(self.n)]
        self.S = [scenario.outcomes[k] ** scenario.inputs[k] for k in range(self.n)]
        self.hmaps = [
            np.array(
                list(itertools.product(range(scenario.outcomes[k]), repeat=self.ncells[k])),
                dtype=np.int64,
            )
            for k in range(self.n)
        ]
        self.smaps = [
            np.array(
                list(itertools.product(range(scenario.outcomes[k]), repeat=scenario.inputs[k])),
                dtype=np.int64,
            )
            for k in range(self.n)
        ]

    def function_rows(self, fp: tuple[int, ...], grid_cap: int):
        """Deduplicated fixed-point rows J(a) for one process function.

        Returns (rows, g_first, reps) where rows[r] is the a_flat-indexed
        array of flattened joint inputs, g_first[r] is the first class-grid
        index realizing it, and reps holds each party's representative output
        choices.
        """
        fp_nd = np.array(fp, dtype=np.int64).reshape(tuple(self.F))
        reps: list[np.ndarray] = []
        n_classes: list[int] = []
        for k in range(self.n):
            rep_k, _ = _choice_classes(fp_nd, k)
            reps.append(rep_k)
            n_classes.append(len(rep_k))
        fp_c = fp_nd[np.ix_(*reps)]

        axes_cards = [n_classes[k] for k in range(self.n) for _ in range(self.sc.settings[k])]
        n_grid = prod(axes_cards)
        if n_grid > grid_cap:
            raise SearchSpaceTooLarge(f"{n_grid} intervention-output grids exceed cap {grid_cap}")
        axis_offset = []
        off = 0
        for k in range(self.n):
            axis_offset.append(off)
            off += self.sc.settings[k]

        J = np.empty((n_grid, self.n_a), dtype=np.int64)
        full_shape = tuple(axes_cards)
        for a_flat, a in enumerate(self.setting_tuples):
            ix = []
            for k in range(self.n):
                axis = axis_offset[k] + a[k]
                shape = [1] * len(axes_cards)
                shape[axis] = n_classes[k]
                ix.append(np.arange(n_classes[k], dtype=np.int64).reshape(shape))
            col = fp_c[tuple(ix)]
            J[:, a_flat] = np.broadcast_to(col, full_shape).reshape(-1)

        base = self.sc.n_inputs
        if base**self.n_a < 2**62:
            powers = base ** np.arange(self.n_a - 1, -1, -1, dtype=np.int64)
            keys = J @ powers
            _, first_idx = np.unique(keys, return_index=True)
        else:  # pragma: no cover - desk-scale scenarios never reach this
            _, first_idx = np.unique(J, axis=0, return_index=True)
        order = np.sort(first_idx)
        return J[order], order, (reps, axes_cards, axis_offset)


def _hopt_values(
    search: _DcSearch, rows: np.ndarray, G: np.ndarray, last: int, others: list[int]
) -> np.ndarray:
    """Best intervention-outcome value per fixed-point row, integer-scaled.

    Outcome maps decompose per party into independent per-setting slices for
    one distinguished party, so the scan is exhaustive over the remaining
    parties' full maps and exact.
    """
    sc = search.sc
    n_rows = rows.shape[0]
    grid_shape = tuple(search.H[k] for k in others)
    grid_size = prod(grid_shape)
    icomp = [(rows // search.in_strides[k]) % sc.inputs[k] for k in range(search.n)]

    relevant = [
        [a_flat for a_flat, a in enumerate(search.setting_tuples) if a[last] == a_last]
        for a_last in range(sc.settings[last])
    ]

    chunk = max(1, (1 << 21) // max(1, grid_size))
    values = np.empty(n_rows, dtype=np.int64)
    for start in range(0, n_rows, chunk):
        end = min(start + chunk, n_rows)
        nr = end - start
        total = np.zeros((nr,) + grid_shape, dtype=np.int64)
        for a_last in range(sc.settings[last]):
            best: np.ndarray | None = None
            for s in range(search.S[last]):
                acc = np.zeros((nr,) + grid_shape, dtype=np.int64)
                for a_flat in relevant[a_last]:
                    a = search.setting_tuples[a_flat]
                    xflat = (
                        search.smaps[last][s, icomp[last][start:end, a_flat]]
                        * search.x_strides[last]
                    ).reshape((nr,) + (1,) * len(others))
                    for pos, k in enumerate(others):
                        cell = a[k] * sc.inputs[k] + icomp[k][start:end, a_flat]
                        xk = search.hmaps[k][:, cell].T * search.x_strides[k]
                        shape = (nr,) + (1,) * pos + (search.H[k],) + (1,) * (len(others) - pos - 1)
                        xflat = xflat + xk.reshape(shape)
                    acc += G[a_flat][xflat]
                best = acc if best is None else np.maximum(best, acc)
            total += best
        values[start:end] = total.reshape(nr, -1).max(axis=1)
    return values


def _hopt_detail(
    search: _DcSearch, row: np.ndarray, G: np.ndarray, last: int, others: list[int]
) -> tuple[int, dict[int, int], list[int]]:
    """Recompute the optimum for one row, returning the winning outcome maps."""
    sc = search.sc
    grid_shape = tuple(search.H[k] for k in others)
    single = row.reshape(1, -1)
    icomp = [(single // search.in_strides[k]) % sc.inputs[k] for k in range(search.n)]

    # Reproduce the per-grid totals, then pick the first-maximizing grid point.
    total = np.zeros((1,) + grid_shape, dtype=np.int64)
    per_setting_best: list[np.ndarray] = []
    for a_last in range(sc.settings[last]):
        best = None
        for s in range(search.S[last]):
            acc = np.zeros((1,) + grid_shape, dtype=np.int64)
            for a_flat, a in enumerate(search.setting_tuples):
                if a[last] != a_last:
                    continue
                xflat = (
                    search.smaps[last][s, icomp[last][0, a_flat]] * search.x_strides[last]
                ) * np.ones((1,) + (1,) * len(others), dtype=np.int64)
                for pos, k in enumerate(others):
                    cell = a[k] * sc.inputs[k] + icomp[k][0, a_flat]
                    xk = search.hmaps[k][:, cell] * search.x_strides[k]
                    shape = (1,) + (1,) * pos + (search.H[k],) + (1,) * (len(others) - pos - 1)
                    xflat = xflat + xk.reshape(shape)
                acc += G[a_flat][xflat]
            best = acc if best is None else np.maximum(best, acc)
        per_setting_best.append(best)
        total += best
    flat = int(np.argmax(total))
    value = int(total.reshape(-1)[flat])
    grid_idx = np.unravel_index(flat, grid_shape) if grid_shape else ()
    other_maps = {k: int(grid_idx[pos]) for pos, k in enumerate(others)}

    # First-maximizing slice per setting of the distinguished party.
    last_slices: list[int] = []
    for a_last in range(sc.settings[last]):
        target = int(per_setting_best[a_last].reshape(-1)[flat])
        for s in range(search.S[last]):
            acc = 0
            for a_flat, a in enumerate(search.setting_tuples):
                if a[last] != a_last:
                    continue
                xflat = int(search.smaps[last][s, icomp[last][0, a_flat]]) * search.x_strides[last]
                for pos, k in enumerate(others):
                    cell = a[k] * sc.inputs[k] + int(icomp[k][0, a_flat])
                    xflat += int(search.hmaps[k][other_maps[k], cell]) * search.x_strides[k]
                acc += int(G[a_flat, xflat])
            if acc == target:
                last_slices.append(s)
                break
        else:  # pragma: no cover - the maximum was just computed
            raise AssertionError("lost the per-setting optimum during reconstruction")
    return value, other_maps, last_slices


def _decode_intervention(
    search: _DcSearch,
    grid_flat: int,
    class_info,
    other_maps: dict[int, int],
    last: int,
    last_slices: list[int],
) -> DeterministicIntervention:
    sc = search.sc
    reps, axes_cards, axis_offset = class_info
    digits = []
    remainder = grid_flat
    for card in reversed(axes_cards):
        digits.append(remainder % card)
        remainder //= card
    digits.reverse()

    output_maps = []
    outcome_maps = []
    for k in range(search.n):
        per_setting_out = []
        per_setting_x = []
        for a in range(sc.settings[k]):
            class_id = digits[axis_offset[k] + a]
            choice = search.choices[k][int(reps[k][class_id])]
            per_setting_out.append(tuple(choice))
            if k == last:
                s = last_slices[a]
                per_setting_x.append(tuple(int(v) for v in search.smaps[k][s]))
            else:
                m = other_maps[k]
                per_setting_x.append(
                    tuple(int(search.hmaps[k][m, a * sc.inputs[k] + i]) for i in range(sc.inputs[k]))
                )
        output_maps.append(tuple(per_setting_out))
        outcome_maps.append(tuple(per_setting_x))
    return DeterministicIntervention(tuple(output_maps), tuple(outcome_maps))


@lru_cache(maxsize=16)
def dc_bound(
    game: Game,
    reduced: bool = True,
    candidate_cap: int = CANDIDATE_CAP,
    grid_cap: int = DC_GRID_CAP,
    hgrid_cap: int = DC_HGRID_CAP,
) -> DcBoundResult:
    """Exact maximum of the score over mixtures of process functions.

    Enumerates process functions, memoizes the unique fixed point per joint
    setting for every deterministic output assignment, and exhausts the
    outcome maps with one party's maps optimized per-setting.  The witness is
    the first optimizer in enumeration order.  Results are cached per game
    (all arguments are immutable), since classification and the demo revisit
    the same bounds.
    """
    sc = game.scenario
    search = _DcSearch(sc, reduced, candidate_cap)
    if not search.survey:
        raise AssertionError("constant maps always survive; empty survey is impossible")
    G, scale = _scaled_weighted_payoff(game)
    last = max(range(search.n), key=lambda k: (search.H[k], k))
    others = [k for k in range(search.n) if k != last]
    if prod(search.H[k] for k in others) > hgrid_cap:
        raise SearchSpaceTooLarge("outcome-map grid exceeds its cap")

    best_value: int | None = None
    best_site: tuple[int, int] | None = None  # (function index, ordered-row position)
    memo: dict[bytes, int] = {}

    for w_idx, (_, fp) in enumerate(search.survey):
        rows, _, _ = search.function_rows(fp, grid_cap)
        keys = [rows[r].tobytes() for r in range(rows.shape[0])]
        fresh = [r for r, key in enumerate(keys) if key not in memo]
        if fresh:
            values = _hopt_values(search, rows[fresh], G, last, others)
            for pos, r in enumerate(fresh):
                memo[keys[r]] = int(values[pos])
        for r, key in enumerate(keys):
            value = memo[key]
            if best_value is None or value > best_value:
                best_value = value
                best_site = (w_idx, r)

    assert best_value is not None and best_site is not None
    w_idx, r = best_site
    maps, fp = search.survey[w_idx]
    rows, g_first, class_info = search.function_rows(fp, grid_cap)
    detail_value, other_maps, last_slices = _hopt_detail(search, rows[r], G, last, others)
    if detail_value != best_value:  # pragma: no cover - batch and detail share the formulas
        raise AssertionError("witness reconstruction disagrees with the search optimum")
    intervention = _decode_intervention(
        search, int(g_first[r]), class_info, other_maps, last, last_slices
    )
    witness = QuasiProcessFunction(sc, maps)
    return DcBoundResult(
        value=Fraction(best_value, scale),
        witness_function=witness,
        witness_intervention=intervention,
        functions_searched=len(search.survey),
    )


# ---------------------------------------------------------------------------
# probabilistically-consistent bound (canonical interventions)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcBoundResult:
    value: Fraction
    process: QuasiProcess


@lru_cache(maxsize=16)
def pc_bound_canonical(game: Game, choice_cap: int = CANDIDATE_CAP) -> PcBoundResult:
    """LP maximum over logically consistent environments, canonical interventions.

    Works on the enlarged scenario (inputs = outcome alphabets, outputs =
    setting alphabets) so that the canonical family always applies; there the
    observed behaviour is the environment table itself, p(x|a) = p(i=x|o=a).
    The feasible polytope is cut out by non-negativity, per-output
    normalization, and unit mass at every deterministic output choice; the
    result is an inner bound on the unrestricted value since interventions
    stay fixed.
    """
    sc = canonical_scenario(game.scenario)
    n_i, n_o = sc.n_inputs, sc.n_outputs
    n_vars = n_i * n_o
    objective = [ZERO] * n_vars
    for i_flat in range(n_i):
        for o_flat in range(n_o):
            objective[i_flat * n_o + o_flat] = (
                game.setting_dist[o_flat] * game.payoff[i_flat * n_o + o_flat]
            )
    eq_rows = []
    input_tuples = list(sc.input_tuples())
    for choice in enumerate_output_choices(sc, choice_cap):
        coeffs = [ZERO] * n_vars
        for i_flat, i in enumerate(input_tuples):
            o_flat = flatten(choice.apply(i), sc.outputs)
            coeffs[i_flat * n_o + o_flat] = ONE
        eq_rows.append((tuple(coeffs), ONE))
    solution = lp_solve(
        LinearProgram(objective=tuple(objective), maximize=True, eq=tuple(eq_rows))
    )
    if solution.status is not LpStatus.OPTIMAL:  # pragma: no cover - polytope is nonempty, bounded
        raise AssertionError(f"canonical process polytope LP returned {solution.status}")
    return PcBoundResult(solution.value, QuasiProcess(sc, solution.x))


# ---------------------------------------------------------------------------
# classification against the hierarchy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetVerdict:
    status: str  # "in" | "out" | "unknown"
    certificate: dict


@dataclass(frozen=True)
class ClassLabel:
    qc: SetVerdict
    pc: SetVerdict
    dc: SetVerdict


def _deterministic_correlation_vertices(
    scenario: Scenario,
    reduced: bool,
    candidate_cap: int,
    vertex_cap: int,
    work_cap: int,
) -> tuple[tuple[Fraction, ...], ...]:
    """Deduplicated deterministic behaviours from (process function, intervention).

    These are the extreme points spanning the deterministic-consistency hull.
    """
    search = _DcSearch(scenario, reduced, candidate_cap)
    n_a = scenario.n_settings
    raw_grid = prod(
        len(search.choices[k]) ** scenario.settings[k] for k in range(search.n)
    )
    h_grid = prod(search.H)
    estimate = len(search.survey) * raw_grid * (h_grid + 1) * n_a
    if estimate > work_cap:
        raise CapExceeded(
            f"vertex enumeration needs about {estimate} steps, above the work cap {work_cap}"
        )

    hmap_lists = [
        list(itertools.product(range(scenario.outcomes[k]), repeat=search.ncells[k]))
        for k in range(search.n)
    ]
    vertices: set[tuple[int, ...]] = set()
    for _, fp in search.survey:
        rows, _, _ = search.function_rows(fp, grid_cap=DC_GRID_CAP)
        for r in range(rows.shape[0]):
            row = rows[r]
            cells = []
            for a_flat, a in enumerate(search.setting_tuples):
                i_flat = int(row[a_flat])
                cells.append(
                    tuple(
                        a[k] * scenario.inputs[k]
                        + (i_flat // search.in_strides[k]) % scenario.inputs[k]
                        for k in range(search.n)
                    )
                )
            for h in itertools.product(*hmap_lists):
                vertex = [0] * (scenario.n_outcomes * n_a)
                for a_flat in range(n_a):
                    x_flat = 0
                    for k in range(search.n):
                        x_flat += h[k][cells[a_flat][k]] * search.x_strides[k]
                    vertex[x_flat * n_a + a_flat] = 1
                vertices.add(tuple(vertex))
                if len(vertices) > vertex_cap:
                    raise CapExceeded(
                        f"more than {vertex_cap} deterministic behaviours; "
                        "downgrade to witness mode"
                    )
    ordered = sorted(vertices)
    return tuple(tuple(Fraction(v) for v in vertex) for vertex in ordered)


def classify(
    corr: Correlation,
    witnesses: Sequence[Game] = (),
    vertex_cap: int = HULL_VERTEX_CAP,
    work_cap: int = DC_WORK_CAP,
    candidate_cap: int = CANDIDATE_CAP,
    reduced: bool = True,
) -> ClassLabel:
    """Three-valued membership report against the correlation hierarchy.

    * quasi-consistent: always "in"; the certificate replays exactly.
    * probabilistically consistent: "in" when the behaviour, read as an
      environment on the enlarged scenario under canonical interventions, is
      logically consistent.  That test is sufficient, not necessary, so its
      failure alone never yields "out"; only a witness game carrying a known
      unrestricted bound can.
    * deterministic-consistency: exact hull membership over the deterministic
      vertex set when the caps allow, otherwise witness mode (reported, never
      silent).  Membership is in the convex hull of deterministic behaviours,
      the polytope the bound computations optimize over.
    """
    for witness in witnesses:
        if (
            witness.scenario.settings != corr.scenario.settings
            or witness.scenario.outcomes != corr.scenario.outcomes
        ):
            raise ScenarioMismatch(f"witness game {witness.name!r} has different alphabets")

    process, family = universal_realization(corr)
    replay = evaluate_correlation(process, family)
    if replay.table != corr.table:  # pragma: no cover - the construction is exact
        raise AssertionError("universal realization failed to replay")
    qc = SetVerdict("in", {"process": process, "interventions": family})

    pinned = QuasiProcess(canonical_scenario(corr.scenario), corr.table)
    verdict = is_logically_consistent(pinned, candidate_cap)
    if verdict.consistent:
        pc = SetVerdict(
            "in",
            {
                "process": pinned,
                "interventions": canonical_interventions(pinned.scenario),
            },
        )
    else:
        pc = SetVerdict(
            "unknown",
            {
                "note": "canonical-intervention realization is inconsistent; "
                "the test is sufficient only",
                "violating_choice": verdict.violation,
                "violation_mass": verdict.violation_mass,
            },
        )
        for witness in witnesses:
            if witness.known_pc_bound is None:
                continue
            value = score(witness, corr)
            if value > witness.known_pc_bound:
                pc = SetVerdict(
                    "out",
                    {
                        "witness": witness.name,
                        "score": value,
                        "known_pc_bound": witness.known_pc_bound,
                    },
                )
                break

    dc: SetVerdict
    try:
        vertices = _deterministic_correlation_vertices(
            corr.scenario, reduced, candidate_cap, vertex_cap, work_cap
        )
        result: HullResult = hull_membership(
            HullQuery(corr.table, vertices), cap=vertex_cap
        )
        if result.inside:
            dc = SetVerdict(
                "in",
                {"vertices": vertices, "weights": result.weights},
            )
        else:
            certificate: dict = {
                "separating_functional": result.functional,
                "separation": result.separation,
            }
            for witness in witnesses:
                bound = dc_bound(
                    witness, reduced=reduced, candidate_cap=candidate_cap
                )
                value = score(witness, corr)
                if value > bound.value:
                    certificate["witness"] = witness.name
                    certificate["score"] = value
                    certificate["dc_bound"] = bound.value
                    break
            dc = SetVerdict("out", certificate)
    except CapExceeded as exc:
        dc = SetVerdict("unknown", {"downgraded": str(exc)})
        for witness in witnesses:
            bound = dc_bound(witness, reduced=reduced, candidate_cap=candidate_cap)
            value = score(witness, corr)
            if value > bound.value:
                dc = SetVerdict(
                    "out",
                    {
                        "downgraded": str(exc),
                        "witness": witness.name,
                        "score": value,
                        "dc_bound": bound.value,
                    },
                )
                break

    return ClassLabel(qc=qc, pc=pc, dc=dc)
