"""Main terms, error envelopes, admissible ranges and residual reports.

Big-O statements carry no constants, so every comparison is reported as an
empirical constant |computed - main term| / envelope rather than asserted.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

from .errors import ParameterError, RangeError
from .kernels import EULER_GAMMA, LOG_2PI

DEFAULT_EPS = 0.05
MODES = ("unconditional_small_h", "unconditional_large_h", "rh")
CSV_FIELDS = ("computed", "main_term", "residual", "envelope", "empirical_constant",
              "X", "param", "a", "b", "c")


def c_prime_from_c(c: float) -> float:
    """J-side constant from the R-side constant."""
    return c / 2 + 2 - EULER_GAMMA - LOG_2PI


def c_from_c_prime(c_prime: float) -> float:
    return 2 * (c_prime - 2 + EULER_GAMMA + LOG_2PI)


@dataclass(frozen=True)
class AsymptoticHypothesis:
    """Error-term shape (a, b), the constants c and c', and the envelope
    branch.  Give c or c' (or both, if consistent); c defaults to -4."""

    a: float = 0.0
    b: float = 1.0
    c: float | None = None
    c_prime: float | None = None
    mode: str = "rh"
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not 0 <= self.a < 1:
            raise ParameterError(f"a must lie in [0, 1), got {self.a}")
        if not self.b >= 0:
            raise ParameterError(f"b must be >= 0, got {self.b}")
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not 0 < self.eps < 0.5:
            raise ParameterError(f"eps must lie in (0, 1/2), got {self.eps}")
        c, cp = self.c, self.c_prime
        if c is None and cp is None:
            c = -4.0
        if cp is None:
            cp = c_prime_from_c(c)
        elif c is None:
            c = c_from_c_prime(cp)
        elif abs(c_prime_from_c(c) - cp) > 1e-12 * max(1.0, abs(cp)):
            raise ParameterError(f"c={c} and c'={cp} are inconsistent")
        object.__setattr__(self, "c", float(c))
        object.__setattr__(self, "c_prime", float(cp))

    @property
    def nontrivial(self) -> bool:
        return (self.a, self.b) != (0.0, 0.0)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass(frozen=True)
class ResidualReport:
    """computed vs main term, with the envelope and C = |residual| / envelope.

    ``components`` lists the pieces a composite envelope is made of and
    ``notes`` carries range warnings.
    """

    computed: float
    main_term: float
    residual: float
    envelope: float
    empirical_constant: float
    inputs: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_dict(self) -> dict:
        return _clean({
            "computed": self.computed,
            "main_term": self.main_term,
            "residual": self.residual,
            "envelope": self.envelope,
            "empirical_constant": self.empirical_constant,
            "inputs": dict(self.inputs),
            "components": dict(self.components),
            "notes": list(self.notes),
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        row = {k: getattr(self, k) for k in CSV_FIELDS[:5]}
        for k in CSV_FIELDS[5:]:
            row[k] = self.inputs.get(k, "")
        return {k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                for k, v in row.items()}

    def to_csv(self, header: bool = True) -> str:
        return reports_to_csv([self], header)


def reports_to_csv(reports, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    if header:
        writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def make_report(computed: float, main_term: float, envelope: float, inputs=None,
                components=None, notes=()) -> ResidualReport:
    computed = float(computed)
    main_term = float(main_term)
    residual = computed - main_term
    constant = abs(residual) / envelope if envelope > 0 else math.nan
    return ResidualReport(computed, main_term, residual, float(envelope), constant,
                          dict(inputs or {}), dict(components or {}), tuple(notes))


# ---------------------------------------------------------------------------
# main terms and envelopes
# ---------------------------------------------------------------------------


def j_main_term(X: float, h: float, c_prime: float) -> float:
    """hX (log(X/h) + c')."""
    if not 1 <= h <= X:
        raise ParameterError(f"need 1 <= h <= X, got h={h}, X={X}")
    return h * X * (math.log(X / h) + c_prime)


def r_main_term(X: float, xi: float, c: float) -> float:
    """2 X xi log(X xi) + c X xi."""
    if not 0 < xi <= 0.5:
        raise ParameterError(f"xi must lie in (0, 1/2], got {xi}")
    return 2 * X * xi * math.log(X * xi) + c * X * xi


def _check_branch(X, h, mode, eps, strict_large):
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}")
    if X <= 1:
        raise RangeError(f"X must exceed 1, got {X}")
    split = X**eps
    if mode == "rh":
        ok = 0 < h <= X
    elif mode == "unconditional_small_h":
        ok = 0 < h <= split
    else:
        ok = (split < h if strict_large else split <= h) and h <= X
    if not ok:
        raise RangeError(f"h={h} outside the {mode} branch for X={X}, eps={eps}")


def envelope_E(X: float, h: float, mode: str = "rh", eps: float = DEFAULT_EPS) -> float:
    """Error envelope for the K-weighted moment against J."""
    _check_branch(X, h, mode, eps, strict_large=False)
    L = math.log(X)
    if mode == "rh":
        return (h + 1) * X * L**4
    if mode == "unconditional_small_h":
        return (h + 1) ** 3 * L**2
    return h**3


def envelope_E_tilde(X: float, h: float, mode: str = "rh", eps: float = DEFAULT_EPS) -> float:
    """Error envelope for the smoothed moment against J tilde."""
    _check_branch(X, h, mode, eps, strict_large=True)
    L = math.log(X)
    if mode == "rh":
        return (h + 1) ** 2 * L**4
    if mode == "unconditional_small_h":
        return (h + 1) ** 3 * L**2
    return h**3


def envelope_R_ab(X: float, h: float, a: float, b: float) -> float:
    if not 0 <= a < 1 or b < 0:
        raise ParameterError(f"need 0 <= a < 1 and b >= 0, got a={a}, b={b}")
    if not 0 < h <= X:
        raise RangeError(f"need 0 < h <= X, got h={h}, X={X}")
    L = math.log(X)
    if a == 0:
        if X <= math.e:
            raise RangeError("the a = 0 branch needs log log X > 0")
        return h * X * math.log(L) * L ** (-b)
    return h * X * (h / X) ** a * L ** (-b)


def envelope_mean_square(X: float, xi: float, a: float, b: float) -> float:
    """(X xi)^(3/(3+a)) / (log X)^((b-a-2)/(3+a))."""
    return (X * xi) ** (3 / (3 + a)) / math.log(X) ** ((b - a - 2) / (3 + a))


# ---------------------------------------------------------------------------
# admissible ranges
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Admissible:
    """Bracket [lo, hi] (empty when lo > hi) and the advisory size check on h."""

    lo: float
    hi: float
    advisory_ok: bool | None = None
    advisory_threshold: float | None = None

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi


def admissible_ranges(hyp: AsymptoticHypothesis, X: float, h_or_xi: float,
                      direction: str = "xi_for_h") -> Admissible:
    """xi_for_h: xi-range for given h (capped at 1/2); h_for_xi: h-range for
    given xi."""
    a, b = hyp.a, hyp.b
    L = math.log(X)
    if direction == "xi_for_h":
        h = h_or_xi
        lo = (h / X) ** a * L ** (-b - 4) / h
        hi = min((X / h) ** a * L ** (b + 4) / h, 0.5)
        threshold = X ** (a / (a + 1)) * L ** ((b + 4) / (a + 1))
        return Admissible(lo, hi, h >= threshold, threshold)
    if direction == "h_for_xi":
        xi = h_or_xi
        y = X * xi
        lo = y ** (-a / (2 * a + 6)) / L ** ((a + b + 4) / (2 * a + 6)) / xi
        hi = y ** (4 * a / (a + 3)) * L ** ((3 * a + 4 * b + 13) / (a + 3)) / xi
        return Admissible(lo, hi)
    raise ParameterError(f"direction must be 'xi_for_h' or 'h_for_xi', got {direction!r}")


# ---------------------------------------------------------------------------
# asymptotic reports
# ---------------------------------------------------------------------------


def _echo(hyp, X, param):
    return {"X": X, "param": param, "a": hyp.a, "b": hyp.b, "c": hyp.c,
            "c_prime": hyp.c_prime, "mode": hyp.mode, "eps": hyp.eps}


def variance_asymptotic_report(table, grid, X: int, h: float, hyp: AsymptoticHypothesis) -> ResidualReport:
    """J(X, h) against hX(log(X/h) + c') with envelope X + E + R_ab.

    When ``grid`` is given, the R-side residual at xi = 1/h is attached as a
    component for context.
    """
    from .expsum import r_truncated_exact
    from .variance import compute_J

    notes = []
    if not hyp.nontrivial:
        notes.append("(a, b) = (0, 0) is excluded by the hypothesis")
    if h > X ** (0.5 - hyp.eps):
        notes.append(f"h exceeds X^(1/2 - eps) = {X ** (0.5 - hyp.eps):.6g}")
    rng = admissible_ranges(hyp, X, h, "xi_for_h")
    if rng.empty:
        notes.append("xi-range is empty")
    if not rng.advisory_ok:
        notes.append(f"h below the advisory size {rng.advisory_threshold:.6g}")
    J = compute_J(table, X, h).value
    E = envelope_E(X, h, hyp.mode, hyp.eps)
    Rab = envelope_R_ab(X, h, hyp.a, hyp.b)
    components = {"X": float(X), "E": E, "R_ab": Rab,
                  "xi_lo": rng.lo, "xi_hi": rng.hi}
    if grid is not None:
        xi = min(1.0 / h, 0.5)
        r = r_truncated_exact(grid, xi)
        components["r_residual_at_inverse_h"] = r - r_main_term(X, xi, hyp.c)
    return make_report(J, j_main_term(X, h, hyp.c_prime), X + E + Rab,
                       _echo(hyp, X, h), components, notes)


def mean_square_asymptotic_report(grid, X: int, xi: float, hyp: AsymptoticHypothesis) -> ResidualReport:
    """R(X, xi) against 2X xi log(X xi) + cX xi."""
    from .expsum import r_truncated_exact

    notes = []
    if not hyp.nontrivial:
        notes.append("(a, b) = (0, 0) is excluded by the hypothesis")
    if hyp.a == 0 and hyp.b <= 2:
        msg = "with a = 0 the error term is o(X xi) only for b > 2"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    if xi < X ** (-0.5 + hyp.eps):
        notes.append(f"xi below X^(-1/2 + eps) = {X ** (-0.5 + hyp.eps):.6g}")
    rng = admissible_ranges(hyp, X, xi, "h_for_xi")
    R = r_truncated_exact(grid, xi)
    env = envelope_mean_square(X, xi, hyp.a, hyp.b)
    components = {"h_lo": rng.lo, "h_hi": rng.hi}
    return make_report(R, r_main_term(X, xi, hyp.c), env, _echo(hyp, X, xi),
                       components, notes)
