"""Vulnerability bounds, the threshold policy and belief revision."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .concolic import combined_refine, concolic_refine
from .exact import DEFAULT_FUEL, Dist, EmptyPosterior, posterior_exact, run_dist, true_vulnerability
from .interp import abstract_posterior, ai_run, output_values
from .probpoly import ONE, ZERO, Powerset
from .sampling import SampleParams, output_classifier, sample_refine
from .syntax import And, Assign, If, Lit, Program, Rel, Stmt, Var, assigned_vars, rename_stmt, seq, stmt_vars

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    I = "interval"
    S = "sample"
    CE = "concolic"
    CES = "combined"
    EXACT = "exact"

    @classmethod
    def parse(cls, text: str) -> "Method":
        aliases = {"i": cls.I, "s": cls.S, "ce": cls.CE, "ce+s": cls.CES, "ces": cls.CES}
        t = text.strip().lower()
        if t in aliases:
            return aliases[t]
        return cls(t)


@dataclass(frozen=True)
class MethodParams:
    precision: int = 4
    samples: int = 1000
    omega: float = 0.9
    seed: int = 0
    retries: int = 1000
    multi_run: bool = False
    unroll: int = 64
    fuel: int = DEFAULT_FUEL
    output_limit: int = 4096

    def sample_params(self) -> SampleParams:
        return SampleParams(self.samples, self.omega, self.seed)


@dataclass(frozen=True)
class ThresholdPolicy:
    threshold: Fraction

    def __post_init__(self):
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold must lie in (0, 1], got {self.threshold}")


@dataclass(frozen=True)
class OutputSpec:
    r: str
    o: int


@dataclass(frozen=True)
class Observation:
    """A query already answered: its body and the output it produced."""

    stmt: Stmt
    out: OutputSpec


SEEN = "_seen"


def observation_program(obs: Sequence[Observation], secrets) -> Stmt:
    """A program setting ``_seen`` to 1 iff every observation is reproduced.

    Locals of each query get a per-query suffix so the queries stay independent.
    """
    secrets = set(secrets)
    parts: list[Stmt] = [Assign(SEEN, Lit(0))]
    guard = None
    for k, ob in enumerate(obs):
        names = {x: f"{x}_q{k}" for x in stmt_vars(ob.stmt) if x not in secrets}
        parts.append(rename_stmt(ob.stmt, names))
        test = Rel("==", Var(names.get(ob.out.r, ob.out.r)), Lit(ob.out.o))
        guard = test if guard is None else And(guard, test)
    if guard is not None:
        parts.append(If(guard, Assign(SEEN, Lit(1)), Assign(SEEN, Lit(0))))
    return seq(*parts)


def vulnerability_bound(P: Powerset) -> Fraction:
    """p_max over the minimal total mass, where a point's probability may
    collect contributions from every element whose region meets its own.

    With pairwise disjoint supports a point draws on a single element.
    """
    m = P.m_min()
    if m <= 0:
        if P.elements:
            log.warning("minimal mass is zero; vulnerability bound is vacuous")
        return ONE
    best = ZERO
    for i, e in enumerate(P.elements):
        p = e.p_max
        for j, f in enumerate(P.elements):
            if P.disjoint:
                break
            if j != i and e.region.meet_region(f.region).count().hi > 0:
                p += f.p_max
        best = max(best, p)
    return min(ONE, best / m)


class Belief:
    """Per-group knowledge: each group maps to a Powerset (or an exact Dist).

    Groups are assumed independent. Each group also remembers the queries it
    has answered, which the sampling and concolic refinements need in order
    to test membership in the current support.
    """

    def __init__(self, groups: Mapping[str, Powerset | Dist], history: Mapping[str, tuple[Observation, ...]] | None = None):
        self.groups: dict[str, Powerset | Dist] = dict(groups)
        self.history: dict[str, tuple[Observation, ...]] = {g: tuple((history or {}).get(g, ())) for g in self.groups}
        seen: set[str] = set()
        for g, P in self.groups.items():
            vs = set(P.vars)
            if vs & seen:
                raise ValueError(f"group {g!r} shares variables with another group")
            seen |= vs

    @property
    def vars(self) -> frozenset[str]:
        return frozenset().union(*(P.vars for P in self.groups.values()))

    def group_of(self, vars) -> str:
        vars = set(vars) & self.vars
        for g, P in self.groups.items():
            if vars <= set(P.vars):
                return g
        raise KeyError(f"no single group holds {sorted(vars)}")

    def replace(self, group: str, P: Powerset | Dist, ob: Observation | None = None) -> "Belief":
        groups = dict(self.groups)
        groups[group] = P
        history = dict(self.history)
        if ob is not None:
            history[group] = history[group] + (ob,)
        return Belief(groups, history)

    def bound(self, group: str) -> Fraction:
        P = self.groups[group]
        return true_vulnerability(P) if isinstance(P, Dist) else vulnerability_bound(P)

    def joint_bound(self) -> Fraction:
        """Product of per-group bounds (groups are independent)."""
        out = ONE
        for g in self.groups:
            out *= self.bound(g)
        return out


def prior_dist(P: Powerset) -> Dist:
    """The single distribution a tight, region-disjoint powerset stands for."""
    names = tuple(sorted(P.vars))
    d = Dist(names)
    for e in P.elements:
        n = e.count()
        if not (n.exact and e.p_min == e.p_max and e.s_min == e.s_max == n.lo):
            raise ValueError("exact method needs a fully determined prior")
        d = d + Dist(names, {tuple(env[x] for x in names): e.p_max for env in e.region.points()})
    return d


@dataclass
class OutputReport:
    o: int
    bound: Fraction
    elapsed: float
    posterior: Powerset | Dist | None = None
    note: str = ""


def _body(q: Program | Stmt) -> Stmt:
    return q.bind_inputs() if isinstance(q, Program) else q


def analyze_output(
    prior: Powerset | Dist,
    q: Program | Stmt,
    out: OutputSpec,
    method: Method,
    params: MethodParams,
    history: Sequence[Observation] = (),
) -> OutputReport:
    """Posterior for one observed output and its vulnerability bound."""
    start = time.monotonic()
    s = _body(q)
    secrets = sorted(prior.vars)
    if method is Method.EXACT:
        d = prior if isinstance(prior, Dist) else prior_dist(prior)
        post = posterior_exact(s, d, out.r, out.o, secrets, params.fuel)
        return OutputReport(out.o, true_vulnerability(post), time.monotonic() - start, post)
    if isinstance(prior, Dist):
        raise TypeError("abstract methods need a Powerset prior")
    P = abstract_posterior(s, prior, out.r, out.o, secrets, params.precision, params.unroll)
    # refinements must test membership in the whole support, not just this query's output
    if history:
        s_ref, r_ref, o_ref = observation_program([*history, Observation(s, out)], secrets), SEEN, 1
    else:
        s_ref, r_ref, o_ref = s, out.r, out.o
    note = ""
    writes = assigned_vars(s).union(*(assigned_vars(h.stmt) for h in history))
    if method in (Method.S, Method.CE, Method.CES) and writes & set(secrets):
        # sampled points and path conditions speak of initial values only
        method, note = Method.I, "query assigns to a secret; refinement skipped"
    if method is Method.S:
        P, _ = sample_refine(P, output_classifier(s_ref, r_ref, o_ref, fuel=params.fuel), params.sample_params())
    elif method is Method.CE:
        P, rep, _ = concolic_refine(
            P, s_ref, r_ref, o_ref, None, params.retries, params.seed, params.fuel, params.multi_run
        )
        if not rep.succeeded:
            note = "no concolic run reached the output"
    elif method is Method.CES:
        P, _ = combined_refine(
            P, s_ref, r_ref, o_ref, output_classifier(s_ref, r_ref, o_ref, fuel=params.fuel),
            params.sample_params(), None, params.retries, params.fuel, params.multi_run,
        )
    return OutputReport(out.o, vulnerability_bound(P), time.monotonic() - start, P, note)


def feasible_outputs(prior: Powerset | Dist, q: Program | Stmt, r: str, method: Method, params: MethodParams) -> list[int] | None:
    s = _body(q)
    if method is Method.EXACT:
        d = prior if isinstance(prior, Dist) else prior_dist(prior)
        post = run_dist(s, d, params.fuel)
        i = post.vars.index(r)
        return sorted({k[i] for k in post.probs})
    P = ai_run(s, prior, params.precision, params.unroll, keep=set(prior.vars) | {r})
    return output_values(P, r, params.output_limit)


@dataclass
class Decision:
    accept: bool
    outputs: list[OutputReport] = field(default_factory=list)
    reason: str = ""

    @property
    def worst(self) -> Fraction:
        return max((o.bound for o in self.outputs), default=ZERO)


def _query_vars(q: Program | Stmt) -> set[str]:
    return set(q.secrets) if isinstance(q, Program) else set(stmt_vars(q))


def policy_decide(
    belief: Belief,
    q: Program | Stmt,
    r: str,
    policy: ThresholdPolicy,
    method: Method,
    params: MethodParams,
) -> Decision:
    """Accept iff every feasible output keeps the vulnerability bound within the threshold.

    Any failure of the analysis rejects.
    """
    s = _body(q)
    try:
        group = belief.group_of(_query_vars(q))
        prior = belief.groups[group]
        outs = feasible_outputs(prior, s, r, method, params)
        if outs is None:
            return Decision(False, reason=f"more than {params.output_limit} feasible outputs")
        reports = []
        for o in outs:
            try:
                rep = analyze_output(prior, s, OutputSpec(r, o), method, params, belief.history[group])
            except EmptyPosterior:
                continue
            reports.append(rep)
    except Exception as err:  # fail-safe
        log.warning("analysis failed, rejecting: %s", err)
        return Decision(False, reason=f"analysis failed: {err}")
    accept = all(rep.bound <= policy.threshold for rep in reports)
    return Decision(accept, reports, "" if accept else "some output exceeds the threshold")


class InfeasibleObservation(ValueError):
    pass


def belief_update(
    belief: Belief,
    q: Program | Stmt,
    out: OutputSpec,
    method: Method,
    params: MethodParams,
) -> tuple[Belief, OutputReport]:
    """Replace the queried group's belief by its (refined) posterior."""
    s = _body(q)
    vars = _query_vars(q) & belief.vars
    if not vars:
        return belief, OutputReport(out.o, ZERO, 0.0, None, "query reads no secret")
    group = belief.group_of(vars)
    try:
        rep = analyze_output(belief.groups[group], s, out, method, params, belief.history[group])
    except EmptyPosterior as err:
        raise InfeasibleObservation(str(err)) from err
    P = rep.posterior
    if P is None or (isinstance(P, Powerset) and P.is_empty):
        raise InfeasibleObservation(f"{out.r} = {out.o} is infeasible under the abstract belief")
    return belief.replace(group, P, Observation(s, out)), rep
