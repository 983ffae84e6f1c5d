"""
Data model for single-round communication scenarios.

A scenario fixes, for each party k: a setting alphabet of size ``settings[k]``,
an outcome alphabet of size ``outcomes[k]``, and classical input/output systems
of sizes ``inputs[k]`` / ``outputs[k]``.  Every table in this package is dense
and uses one flattening convention:

* multi-indices flatten row-major with party 1 most significant;
* a conditional table over (object, conditioner) flattens as
  ``flat(object) * n_conditioner + flat(conditioner)``; a quasi-process entry
  p(i|o) therefore lives at ``flat(i) * n_outputs + flat(o)`` and a correlation
  entry p(x|a) at ``flat(x) * n_settings + flat(a)``.

Classical probabilities are exact :class:`fractions.Fraction` values.  All
objects are immutable after construction and every operation here is a pure
function, so concurrent evaluation needs no locking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterator, Sequence

from .errors import (
    InvalidScenario,
    InvalidTable,
    NotCanonicalizable,
    ScenarioMismatch,
)

ZERO = Fraction(0)
ONE = Fraction(1)


def flatten(index: Sequence[int], cards: Sequence[int]) -> int:
    """Row-major flat index of a multi-index, first component most significant."""
    if len(index) != len(cards):
        raise IndexError(f"index length {len(index)} != {len(cards)} cards")
    flat = 0
    for value, card in zip(index, cards):
        if not 0 <= value < card:
            raise IndexError(f"component {value} out of range for cardinality {card}")
        flat = flat * card + value
    return flat


def unflatten(flat: int, cards: Sequence[int]) -> tuple[int, ...]:
    """Inverse of :func:`flatten`."""
    total = prod(cards)
    if not 0 <= flat < total:
        raise IndexError(f"flat index {flat} out of range for {total} cells")
    out = []
    for card in reversed(cards):
        out.append(flat % card)
        flat //= card
    return tuple(reversed(out))


def iter_tuples(cards: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All multi-indices in ascending flattened (lexicographic) order."""
    return itertools.product(*(range(card) for card in cards))


@dataclass(frozen=True)
class Scenario:
    """Party count plus per-party setting/outcome/input/output alphabet sizes."""

    settings: tuple[int, ...]
    outcomes: tuple[int, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.settings)
        if n == 0:
            raise InvalidScenario("at least one party is required")
        for name in ("settings", "outcomes", "inputs", "outputs"):
            cards = getattr(self, name)
            if len(cards) != n:
                raise InvalidScenario(f"{name} has {len(cards)} entries for {n} parties")
            if any(card < 1 for card in cards):
                raise InvalidScenario(f"{name} contains a non-positive cardinality: {cards}")

    @property
    def n_parties(self) -> int:
        return len(self.settings)

    @property
    def n_settings(self) -> int:
        return prod(self.settings)

    @property
    def n_outcomes(self) -> int:
        return prod(self.outcomes)

    @property
    def n_inputs(self) -> int:
        return prod(self.inputs)

    @property
    def n_outputs(self) -> int:
        return prod(self.outputs)

    def setting_tuples(self) -> Iterator[tuple[int, ...]]:
        return iter_tuples(self.settings)

    def outcome_tuples(self) -> Iterator[tuple[int, ...]]:
        return iter_tuples(self.outcomes)

    def input_tuples(self) -> Iterator[tuple[int, ...]]:
        return iter_tuples(self.inputs)

    def output_tuples(self) -> Iterator[tuple[int, ...]]:
        return iter_tuples(self.outputs)


def make_scenario(
    n_parties: int,
    settings: int | Sequence[int],
    outcomes: int | Sequence[int],
    inputs: int | Sequence[int],
    outputs: int | Sequence[int],
) -> Scenario:
    """Build a validated scenario; scalar cardinalities apply to every party."""
    if n_parties < 1:
        raise InvalidScenario("n_parties must be positive")

    def expand(value: int | Sequence[int], name: str) -> tuple[int, ...]:
        if isinstance(value, int):
            cards = (value,) * n_parties
        else:
            cards = tuple(int(v) for v in value)
        if len(cards) != n_parties:
            raise InvalidScenario(f"{name} needs one cardinality per party")
        return cards

    return Scenario(
        settings=expand(settings, "settings"),
        outcomes=expand(outcomes, "outcomes"),
        inputs=expand(inputs, "inputs"),
        outputs=expand(outputs, "outputs"),
    )


def canonical_scenario(scenario: Scenario) -> Scenario:
    """The enlarged scenario with input_card = outcome_card and output_card = setting_card."""
    return Scenario(
        settings=scenario.settings,
        outcomes=scenario.outcomes,
        inputs=scenario.outcomes,
        outputs=scenario.settings,
    )


def _check_distribution_table(
    table: Sequence[Fraction],
    n_object: int,
    n_conditioner: int,
    what: str,
) -> None:
    if len(table) != n_object * n_conditioner:
        raise InvalidTable(
            f"{what}: table has {len(table)} entries, expected {n_object * n_conditioner}"
        )
    for entry in table:
        if entry < 0:
            raise InvalidTable(f"{what}: negative entry {entry}")
    for cond in range(n_conditioner):
        mass = sum(table[obj * n_conditioner + cond] for obj in range(n_object))
        if mass != 1:
            raise InvalidTable(f"{what}: conditioner column {cond} has mass {mass}, expected 1")


def _as_fraction_table(table: Sequence) -> tuple[Fraction, ...]:
    return tuple(Fraction(entry) for entry in table)


@dataclass(frozen=True)
class Correlation:
    """Observed behaviour p(x|a), exact rational, normalized per joint setting."""

    scenario: Scenario
    table: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", _as_fraction_table(self.table))
        _check_distribution_table(
            self.table, self.scenario.n_outcomes, self.scenario.n_settings, "correlation"
        )

    @classmethod
    def unchecked(cls, scenario: Scenario, table: Sequence[Fraction]) -> "Correlation":
        """Bypass validation; only for deliberately malformed test tables."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "scenario", scenario)
        object.__setattr__(obj, "table", tuple(table))
        return obj

    def prob(self, x: Sequence[int], a: Sequence[int]) -> Fraction:
        sc = self.scenario
        return self.table[flatten(x, sc.outcomes) * sc.n_settings + flatten(a, sc.settings)]


@dataclass(frozen=True)
class QuasiProcess:
    """Environment behaviour p(i|o): an arbitrary conditional distribution."""

    scenario: Scenario
    table: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", _as_fraction_table(self.table))
        _check_distribution_table(
            self.table, self.scenario.n_inputs, self.scenario.n_outputs, "quasi-process"
        )

    def prob(self, i: Sequence[int], o: Sequence[int]) -> Fraction:
        sc = self.scenario
        return self.table[flatten(i, sc.inputs) * sc.n_outputs + flatten(o, sc.outputs)]

    def prob_flat(self, i_flat: int, o_flat: int) -> Fraction:
        return self.table[i_flat * self.scenario.n_outputs + o_flat]


@dataclass(frozen=True)
class InterventionFamily:
    """Per-party local operations p(x_k, o_k | a_k, i_k), exact rationals.

    Party k's table flattens rows by (x_k, o_k) and columns by (a_k, i_k):
    entry index ``(x*d_O + o) * (n_A*d_I) + (a*d_I + i)``.
    """

    scenario: Scenario
    tables: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        sc = self.scenario
        if len(self.tables) != sc.n_parties:
            raise InvalidTable(f"expected {sc.n_parties} party tables, got {len(self.tables)}")
        converted = tuple(_as_fraction_table(t) for t in self.tables)
        object.__setattr__(self, "tables", converted)
        for k, table in enumerate(converted):
            _check_distribution_table(
                table,
                sc.outcomes[k] * sc.outputs[k],
                sc.settings[k] * sc.inputs[k],
                f"intervention for party {k}",
            )

    @classmethod
    def unchecked(
        cls, scenario: Scenario, tables: Sequence[Sequence[Fraction]]
    ) -> "InterventionFamily":
        obj = object.__new__(cls)
        object.__setattr__(obj, "scenario", scenario)
        object.__setattr__(obj, "tables", tuple(tuple(t) for t in tables))
        return obj

    def prob(self, k: int, x: int, o: int, a: int, i: int) -> Fraction:
        sc = self.scenario
        row = x * sc.outputs[k] + o
        col = a * sc.inputs[k] + i
        return self.tables[k][row * (sc.settings[k] * sc.inputs[k]) + col]


@dataclass(frozen=True)
class DeterministicIntervention:
    """Deterministic local operations: o_k = g_k(a_k, i_k) and x_k = h_k(a_k, i_k).

    ``output_maps[k][a][i]`` is the output sent, ``outcome_maps[k][a][i]`` the
    reported outcome.  These are the vertices of the local-intervention polytope.
    """

    output_maps: tuple[tuple[tuple[int, ...], ...], ...]
    outcome_maps: tuple[tuple[tuple[int, ...], ...], ...]

    def to_family(self, scenario: Scenario) -> InterventionFamily:
        tables = []
        for k in range(scenario.n_parties):
            n_a, d_i = scenario.settings[k], scenario.inputs[k]
            n_x, d_o = scenario.outcomes[k], scenario.outputs[k]
            table = [ZERO] * (n_x * d_o * n_a * d_i)
            for a in range(n_a):
                for i in range(d_i):
                    o = self.output_maps[k][a][i]
                    x = self.outcome_maps[k][a][i]
                    row = x * d_o + o
                    table[row * (n_a * d_i) + a * d_i + i] = ONE
            tables.append(tuple(table))
        return InterventionFamily(scenario, tuple(tables))


@dataclass(frozen=True)
class EvaluatedCorrelation:
    """Raw output of the single-round evaluator, before normalization checks.

    Quasi-processes that are not logically consistent produce sub- or
    super-normalized statistics; ``setting_mass`` reports the total mass per
    joint setting so such objects stay representable and testable.
    """

    scenario: Scenario
    table: tuple[Fraction, ...]
    setting_mass: tuple[Fraction, ...]

    @property
    def is_normalized(self) -> bool:
        return all(mass == 1 for mass in self.setting_mass)

    def to_correlation(self) -> Correlation:
        return Correlation(self.scenario, self.table)


def evaluate_correlation(
    process: QuasiProcess, interventions: InterventionFamily
) -> EvaluatedCorrelation:
    """Contract the environment with the local operations.

    Computes, for every (x, a),

        p(x|a) = sum_{i,o} prod_k p(x_k, o_k | a_k, i_k) * p(i|o).

    Entries are guaranteed non-negative; normalization is reported, not assumed.
    """
    if process.scenario != interventions.scenario:
        raise ScenarioMismatch("process and interventions live on different scenarios")
    sc = process.scenario
    n_x, n_a = sc.n_outcomes, sc.n_settings
    n_parties = sc.n_parties
    table = [ZERO] * (n_x * n_a)

    input_tuples = list(sc.input_tuples())
    output_tuples = list(sc.output_tuples())
    outcome_tuples = list(sc.outcome_tuples())

    for a_flat, a in enumerate(sc.setting_tuples()):
        for i_flat, i in enumerate(input_tuples):
            for o_flat, o in enumerate(output_tuples):
                weight = process.prob_flat(i_flat, o_flat)
                if weight == 0:
                    continue
                for x_flat, x in enumerate(outcome_tuples):
                    term = weight
                    for k in range(n_parties):
                        factor = interventions.prob(k, x[k], o[k], a[k], i[k])
                        if factor == 0:
                            term = ZERO
                            break
                        term *= factor
                    if term != 0:
                        table[x_flat * n_a + a_flat] += term

    mass = tuple(
        sum(table[x_flat * n_a + a_flat] for x_flat in range(n_x)) for a_flat in range(n_a)
    )
    return EvaluatedCorrelation(sc, tuple(table), mass)


def canonical_interventions(scenario: Scenario) -> InterventionFamily:
    """The deterministic family where each party reports its input and sends its setting.

    Requires outcome_card = input_card and output_card = setting_card per party.
    """
    for k in range(scenario.n_parties):
        if scenario.outcomes[k] != scenario.inputs[k] or scenario.outputs[k] != scenario.settings[k]:
            raise NotCanonicalizable(
                f"party {k}: needs outcome_card == input_card and output_card == setting_card, "
                f"got outcomes={scenario.outcomes[k]}, inputs={scenario.inputs[k]}, "
                f"outputs={scenario.outputs[k]}, settings={scenario.settings[k]}"
            )
    output_maps = []
    outcome_maps = []
    for k in range(scenario.n_parties):
        output_maps.append(
            tuple(tuple(a for _ in range(scenario.inputs[k])) for a in range(scenario.settings[k]))
        )
        outcome_maps.append(
            tuple(tuple(i for i in range(scenario.inputs[k])) for _ in range(scenario.settings[k]))
        )
    det = DeterministicIntervention(tuple(output_maps), tuple(outcome_maps))
    return det.to_family(scenario)


def universal_realization(corr: Correlation) -> tuple[QuasiProcess, InterventionFamily]:
    """Quasi-process realization reproducing an arbitrary valid correlation.

    On the enlarged scenario (inputs = outcome alphabets, outputs = setting
    alphabets) the environment simply encodes the target behaviour,
    p(i|o) = p(x=i | a=o), and the canonical interventions extract it.  The
    round trip through :func:`evaluate_correlation` is exact.
    """
    enlarged = canonical_scenario(corr.scenario)
    # Same flat layout on both sides: object-major, conditioner-minor.
    process = QuasiProcess(enlarged, corr.table)
    return process, canonical_interventions(enlarged)


@dataclass(frozen=True)
class CorrelationValidation:
    """Report-style result of checking non-negativity and normalization."""

    negative_entries: tuple[tuple[int, int, Fraction], ...]  # (x_flat, a_flat, value)
    mass_violations: tuple[tuple[int, Fraction], ...]  # (a_flat, mass)

    @property
    def ok(self) -> bool:
        return not self.negative_entries and not self.mass_violations


def validate_correlation(scenario: Scenario, table: Sequence[Fraction]) -> CorrelationValidation:
    """Check a raw table against the correlation invariants without raising."""
    n_x, n_a = scenario.n_outcomes, scenario.n_settings
    if len(table) != n_x * n_a:
        raise InvalidTable(f"table has {len(table)} entries, expected {n_x * n_a}")
    entries = [Fraction(v) for v in table]
    negatives = tuple(
        (x_flat, a_flat, entries[x_flat * n_a + a_flat])
        for x_flat in range(n_x)
        for a_flat in range(n_a)
        if entries[x_flat * n_a + a_flat] < 0
    )
    masses = []
    for a_flat in range(n_a):
        mass = sum(entries[x_flat * n_a + a_flat] for x_flat in range(n_x))
        if mass != 1:
            masses.append((a_flat, mass))
    return CorrelationValidation(negatives, tuple(masses))
