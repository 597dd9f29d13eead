"""Hamiltonian side: the momentum phase space and the Legendre transfer.

The phase space T*(T^(k-1)Q) carries coordinates (q_i^A, p_A^i) for
0 <= i <= k-1 with the jets ordered before the momenta.  Its canonical
structures are the Liouville form θ_{k-1} = Σ p_A^i dq_i^A and the
symplectic form ω_{k-1} = −dθ_{k-1} = Σ dq_i^A ∧ dp_A^i.

The Legendre map sends the velocity space T^(2k-1)Q to phase space by
q_i^A ↦ q_i^A (a bundle map over T^(k-1)Q) and p_A^i ↦ p̂^i_A.  Its
inverse is computed by back-substitution through the triangular
structure of the momenta — p̂^{k-1} involves jets up to order k only,
p̂^{k-2} adds order k+1, and so on — one affine solve per jet order.
When some stage is not affine in its unknowns the symbolic inverse is
reported absent rather than guessed.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

from .expr import Constant, Coordinate, Expression, ZERO, jet, momentum
from .forms import CoordMap, OneFormField, TwoFormField, exterior_derivative
from .jets import JetSpace, VectorField
from .lagrangian import LagrangianError, LagrangianSystem, solve_linear_exact


class HamiltonianError(ValueError):
    """Raised for phase-space domain violations and failed transfers."""


@dataclass(frozen=True)
class PhaseSpace:
    """T*(T^(k-1)Q): jets and momenta of orders 0..k-1 over an n-dim base."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise HamiltonianError("base dimension must be at least 1")
        if self.k < 1:
            raise HamiltonianError("the jet order k must be at least 1")

    @property
    def dimension(self) -> int:
        return 2 * self.k * self.n

    @property
    def coordinates(self) -> Tuple[Coordinate, ...]:
        jets = tuple(
            jet(i, A) for i in range(self.k) for A in range(1, self.n + 1)
        )
        momenta = tuple(
            momentum(i, A) for i in range(self.k) for A in range(1, self.n + 1)
        )
        return jets + momenta

    @property
    def base_space(self) -> JetSpace:
        """T^(k-1)Q, the footprint of sections and 1-forms."""
        return JetSpace(self.n, self.k - 1)

    def table(self, constants=()):
        from .expr import SymbolTable

        return SymbolTable(self.coordinates, constants)

    def liouville_form(self) -> OneFormField:
        """θ_{k-1} = Σ p_A^i dq_i^A."""
        coeffs = {
            jet(i, A): Expression.coordinate(momentum(i, A))
            for i in range(self.k)
            for A in range(1, self.n + 1)
        }
        return OneFormField.from_coefficients(self, coeffs)

    def symplectic_form(self) -> TwoFormField:
        """ω_{k-1} = −dθ_{k-1} = Σ dq_i^A ∧ dp_A^i."""
        return -exterior_derivative(self.liouville_form())


# ---------------------------------------------------------------------------
# Legendre map


class LegendreMap:
    """Forward and (when available) inverse Legendre–Ostrogradsky rules.

    ``forward`` maps the velocity space onto phase space; ``inverse`` maps
    back and is None when some inversion stage was not affine, in which
    case ``diagnostic`` says why.  ``hyperregular`` is True exactly when
    the inverse was obtained by globally valid (affine) solves.
    """

    __slots__ = ("system", "forward", "inverse", "hyperregular", "diagnostic")

    def __init__(self, system, forward: CoordMap, inverse: Optional[CoordMap],
                 hyperregular: bool, diagnostic: Optional[str] = None):
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "forward", forward)
        object.__setattr__(self, "inverse", inverse)
        object.__setattr__(self, "hyperregular", bool(hyperregular))
        object.__setattr__(self, "diagnostic", diagnostic)

    def __setattr__(self, name, value):
        raise AttributeError("LegendreMap is immutable")

    @property
    def phase_space(self) -> PhaseSpace:
        return self.forward.target

    def momentum_rule(self, i: int, axis: int) -> Expression:
        return self.forward.images[momentum(i, axis)]

    def inverse_rule(self, j: int, axis: int) -> Expression:
        if self.inverse is None:
            raise HamiltonianError(
                "the Legendre map has no symbolic inverse: %s" % self.diagnostic
            )
        return self.inverse.images[jet(j, axis)]


def legendre(sys: LagrangianSystem) -> LegendreMap:
    """The Legendre–Ostrogradsky map of a regular Lagrangian system."""
    hess = sys.hessian()
    if not hess.invertible:
        raise LagrangianError(
            "the Hessian in the top velocities is singular; "
            "the Legendre map is not defined as a local diffeomorphism"
        )
    k, n = sys.k, sys.n
    cartan = sys.cartan()
    phase = PhaseSpace(n, k)
    velocity = sys.velocity_space

    images: Dict[Coordinate, Expression] = {}
    for i in range(k):
        for A in range(1, n + 1):
            images[jet(i, A)] = Expression.coordinate(jet(i, A))
            images[momentum(i, A)] = cartan.momentum(i, A)
    forward = CoordMap(velocity, phase, images)

    solved: Dict[Coordinate, Expression] = {}
    diagnostic = None
    for j in range(k, 2 * k):
        level = 2 * k - 1 - j
        unknowns = [jet(j, B) for B in range(1, n + 1)]
        residuals = []
        for A in range(1, n + 1):
            e = cartan.momentum(level, A).subs(solved)
            residuals.append(Expression.coordinate(momentum(level, A)) - e)
        matrix = []
        ok = True
        for rA in residuals:
            row = []
            for u in unknowns:
                entry = rA.diff(u)
                if any(c.order >= j and c.kind == "jet" for c in entry.free_coordinates()):
                    ok = False
                row.append(entry)
            matrix.append(row)
        if not ok:
            diagnostic = (
                "solving for order-%d jets is not affine; "
                "symbolic inversion unavailable" % j
            )
            break
        offset = [rA.subs({u: ZERO for u in unknowns}) for rA in residuals]
        try:
            solution = solve_linear_exact(matrix, [-o for o in offset])
        except LagrangianError as err:
            diagnostic = "order-%d solve failed: %s" % (j, err)
            break
        stage = dict(zip(unknowns, solution))
        stray = set()
        for rule in stage.values():
            for c in rule.free_coordinates():
                if c.kind == "jet" and c.order >= k:
                    stray.add(c.name)
        if stray:
            diagnostic = (
                "order-%d solve left velocity coordinates %s unresolved"
                % (j, ", ".join(sorted(stray)))
            )
            break
        solved.update(stage)

    if diagnostic is not None:
        return LegendreMap(sys, forward, None, False, diagnostic)

    inv_images: Dict[Coordinate, Expression] = {}
    for i in range(k):
        for A in range(1, n + 1):
            inv_images[jet(i, A)] = Expression.coordinate(jet(i, A))
    inv_images.update(solved)
    inverse = CoordMap(phase, velocity, inv_images)
    return LegendreMap(sys, forward, inverse, True)


# ---------------------------------------------------------------------------
# Hamiltonian systems


class HamiltonianSystem:
    """A Hamiltonian function on T*(T^(k-1)Q) with a cached field X_h."""

    __slots__ = ("phase", "h", "constants", "_lock", "_cache")

    def __init__(self, phase: PhaseSpace, h: Expression, constants=()):
        if not isinstance(h, Expression):
            h = Expression(h)
        allowed = set(phase.coordinates)
        stray = h.free_coordinates() - allowed
        if stray:
            raise HamiltonianError(
                "h references coordinates outside phase space: %s"
                % ", ".join(sorted(c.name for c in stray))
            )
        table = {}
        for c in constants:
            if not isinstance(c, Constant):
                c = Constant(str(c))
            table[c.name] = c
        for name in sorted(h.free_constants()):
            if name not in table:
                raise HamiltonianError(
                    "constant '%s' appears in h but is not declared" % name
                )
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "constants", dict(table))
        object.__setattr__(self, "_lock", threading.RLock())
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("HamiltonianSystem is immutable")

    def constant_values(self) -> Dict[str, object]:
        return {
            name: c.value
            for name, c in self.constants.items()
            if c.value is not None
        }

    def field(self) -> VectorField:
        with self._lock:
            if "field" not in self._cache:
                self._cache["field"] = _build_hamiltonian_field(self)
            return self._cache["field"]


def hamiltonian(sys: LagrangianSystem, fl: LegendreMap) -> HamiltonianSystem:
    """h = E_L pulled back along the inverse Legendre map."""
    if fl.inverse is None:
        raise HamiltonianError(
            "the Legendre map has no symbolic inverse: %s" % fl.diagnostic
        )
    h = fl.inverse.pull_function(sys.cartan().energy)
    return HamiltonianSystem(fl.phase_space, h, sys.constants.values())


def _build_hamiltonian_field(hs: HamiltonianSystem) -> VectorField:
    phase, h = hs.phase, hs.h
    components = []
    for i in range(phase.k):
        for A in range(1, phase.n + 1):
            components.append(h.diff(momentum(i, A)))
    for i in range(phase.k):
        for A in range(1, phase.n + 1):
            components.append(-h.diff(jet(i, A)))
    return VectorField(phase, components)


def hamiltonian_field(hs: HamiltonianSystem) -> VectorField:
    """X_h with components (∂h/∂p_A^i, −∂h/∂q_i^A)."""
    return hs.field()


def poisson(f: Expression, g: Expression, ps: PhaseSpace) -> Expression:
    """{f, g} = Σ (∂f/∂q_i^A ∂g/∂p_A^i − ∂f/∂p_A^i ∂g/∂q_i^A)."""
    if not isinstance(f, Expression):
        f = Expression(f)
    if not isinstance(g, Expression):
        g = Expression(g)
    total = ZERO
    for i in range(ps.k):
        for A in range(1, ps.n + 1):
            q, p = jet(i, A), momentum(i, A)
            total = total + f.diff(q) * g.diff(p) - f.diff(p) * g.diff(q)
    return total
