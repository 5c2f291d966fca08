"""Named regression scenarios, one per reproduced construction.

Every scenario is a function ``(params, seed, tol) -> (outputs, checks)``
registered with its default parameters.  A check compares one quantity
against an expectation; a scenario passes iff all its checks pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import certificates as cert
from . import cones, hull, measures, quantum, spaces, stability

DEFAULT_SEED = 0x5EED


@dataclass
class Check:
    quantity: str
    value: object
    expected: object
    kind: str = "close"        # close | le | ge | between | equal
    tol: float = 0.0

    @property
    def passed(self) -> bool:
        v, e = self.value, self.expected
        if self.kind == "close":
            return abs(v - e) <= self.tol
        if self.kind == "le":
            return v <= e + self.tol
        if self.kind == "ge":
            return v >= e - self.tol
        if self.kind == "between":
            return e[0] < v < e[1]
        if self.kind == "equal":
            return v == e
        raise ValueError(f"unknown check kind {self.kind!r}")

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "value": self.value, "expected": self.expected,
                "kind": self.kind, "tol": self.tol, "pass": self.passed}


@dataclass
class Scenario:
    name: str
    module: str
    basis: str                 # what the expected value rests on
    expected: str
    run: Callable
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "module": self.module, "basis": self.basis,
                "expected": self.expected, "parameters": self.parameters}


REGISTRY: dict = {}


def register(name, module, basis, expected, **parameters):
    def deco(fn):
        if name in REGISTRY:
            raise ValueError(f"duplicate scenario {name!r}")
        REGISTRY[name] = Scenario(name, module, basis, expected, fn, parameters)
        return fn
    return deco


def list_scenarios(filt: Optional[str] = None) -> list:
    """Scenarios in registry order; ``filt`` matches a name substring or a module tag."""
    out = []
    for s in REGISTRY.values():
        if filt is None or filt in s.name or filt in s.module:
            out.append(s)
    return out


def run_scenario(name: str, overrides: Optional[dict] = None, seed: int = DEFAULT_SEED,
                 tol: Optional[float] = None) -> dict:
    """Run one scenario; the report has ``inputs``, ``outputs``, ``tolerances`` and ``pass``."""
    if name not in REGISTRY:
        raise KeyError(f"unknown scenario {name!r}")
    sc = REGISTRY[name]
    params = dict(sc.parameters)
    for k in (overrides or {}):
        if k not in params:
            raise KeyError(f"scenario {name!r} has no parameter {k!r}")
    params.update(overrides or {})
    outputs, checks = sc.run(params, seed, tol)
    return {
        "scenario": name,
        "module": sc.module,
        "inputs": {"parameters": params, "seed": seed},
        "outputs": outputs,
        "checks": [c.to_json() for c in checks],
        "tolerances": {c.quantity: c.tol for c in checks},
        "pass": all(c.passed for c in checks),
    }


def _t(tol, default):
    return default if tol is None else tol


# --- core_spaces / measures ---------------------------------------------------


@register("core-norms-membership", "core_spaces", "direct substitution",
          "|(3,4)|_2 = 5; x_n in A_2 and Delta_2; (1,1) not in Delta_2")
def _core(params, seed, tol):
    n = 9
    xn = np.full(n, 1.0 / n)
    checks = [
        Check("norm_3_4", spaces.lp_norm([3.0, 4.0], 2), 5.0, tol=1e-15),
        Check("norm_x_n", spaces.lp_norm(xn, 2), 1 / 3, tol=1e-15),
        Check("x_n_in_A2", spaces.contains(spaces.SetDescriptor.lp_cone(2, n), xn), True, "equal"),
        Check("x_n_in_Delta2", spaces.contains(spaces.SetDescriptor.delta_p(2, n), xn), True,
              "equal"),
        Check("ones_in_Delta2", spaces.contains(spaces.SetDescriptor.delta_p(2, 2), [1.0, 1.0]),
              False, "equal"),
    ]
    return {}, checks


@register("choquet-jensen", "measures", "Jensen inequality for convex tests",
          "uniform on {e_1, e_2} dominates delta at the midpoint")
def _choquet(params, seed, tol):
    mu = measures.FiniteMeasure.uniform(np.eye(2))
    nu = measures.FiniteMeasure.dirac([0.5, 0.5])
    fam = measures.ConvexTestFamily(
        [lambda y: float(y @ y), lambda y: abs(y[0] - y[1]), lambda y: float(np.max(y))],
        ["sq_norm", "abs_diff", "max"])
    v = measures.choquet_compare(mu, nu, fam)
    return {"verdict": v.value}, [Check("verdict", v.value, "DominatesOnFamily", "equal")]


# --- hull_solver ---------------------------------------------------------------


@register("example-1-lsc-gap", "hull_solver", "the hull of 1 - |x|_p vanishes on x_k but not at 0",
          "gap = 1 +- 1e-9", p=2.0, N=16, restarts=4)
def _lsc(params, seed, tol):
    N, p = params["N"], params["p"]
    desc = spaces.SetDescriptor.lp_cone(p, N)
    f = hull.builtin_function("one_minus_norm", desc)
    seq = [np.concatenate([np.full(k, 1.0 / k), np.zeros(N - k)]) for k in range(1, N + 1)]
    rep = hull.lsc_probe(desc, f, seq, np.zeros(N),
                         hull.HullConfig(restarts=params["restarts"], seed=seed))
    return ({"gap": rep.gap, "limit_value": rep.limit_value, "tail_values": rep.tail_values},
            [Check("gap", rep.gap, 1.0, tol=_t(tol, 1e-9))])


@register("example-1-hull-zero", "hull_solver", "uniform decomposition on e_1..e_n",
          "co f(x_n) = 0 +- 1e-9", p=2.0, n=8, restarts=4)
def _hull_zero(params, seed, tol):
    n = params["n"]
    desc = spaces.SetDescriptor.lp_cone(params["p"], n)
    f = hull.builtin_function("one_minus_norm", desc)
    sol = hull.co_f_search(desc, f, np.full(n, 1.0 / n),
                           hull.HullConfig(restarts=params["restarts"], seed=seed))
    return ({"solution": sol.to_json()},
            [Check("value", sol.value, 0.0, tol=_t(tol, 1e-9)),
             Check("barycenter_error", sol.barycenter_error(np.full(n, 1.0 / n)), 0.0,
                   "le", 1e-12)])


@register("simplex-hull-exact", "hull_solver", "affine interpolation of vertex values",
          "search equals exact value to 1e-6 at random points", dim=6, points=5)
def _simplex_exact(params, seed, tol):
    rng = np.random.default_rng(seed)
    d = params["dim"]
    desc = spaces.SetDescriptor.standard_simplex(d)
    vals = rng.uniform(-1, 1, d)
    f = hull.simplex_table_function(desc, vals, curvature=rng.uniform(0.1, 2))
    errs = []
    for _ in range(params["points"]):
        x = rng.dirichlet(np.ones(d))
        got = hull.co_f_search(desc, f, x, hull.HullConfig(seed=seed)).value
        errs.append(abs(got - hull.co_f_simplex_exact(vals, x)))
    return {"errors": errs}, [Check("max_error", max(errs), 0.0, "le", _t(tol, 1e-6))]


# --- stability -----------------------------------------------------------------


@register("lemma-2-ball-bound", "stability", "closed form (0.25 - 0.19)/(0.25 - 0.01)",
          "r = 0.25 exactly", norm=0.9, delta=0.5)
def _ball_bound(params, seed, tol):
    r = stability.ball_bound_from_norm(params["norm"], params["delta"])
    return {"r": r}, [Check("r", r, 0.25, tol=_t(tol, 0.0))]


@register("lemma-2-adversary-d3", "stability", "LP adversary against the ball bound",
          "max outside mass <= 0.75 + 1e-7", norm=0.9, delta=0.5, dim=3, trials=100)
def _adversary(params, seed, tol):
    z = np.zeros(params["dim"])
    z[0] = params["norm"]
    m = stability.ball_bound_adversary(z, params["delta"], trials=params["trials"], seed=seed)
    bound = 1 - stability.ball_bound(z, params["delta"])
    return ({"max_outside_mass": m, "one_minus_r": bound},
            [Check("max_outside_mass", m, bound, "le", _t(tol, 1e-7))])


@register("deltap-stability-split", "stability", "direct verification of each split",
          "every split exact with achieved_eps < eps", p=2.0, N=64, instances=50)
def _split(params, seed, tol):
    rng = np.random.default_rng(seed)
    p, N = params["p"], params["N"]
    desc = spaces.SetDescriptor.delta_p(p, N)
    ok, worst = 0, 0.0
    for _ in range(params["instances"]):
        a, b, z, eps = random_split_instance(rng, N, p)
        res = stability.delta_p_split(p, a, b, z, eps)
        good = (np.array_equal(0.5 * (res.x + res.y), z) and spaces.contains(desc, res.x)
                and spaces.contains(desc, res.y) and res.achieved_eps < eps)
        ok += good
        worst = max(worst, res.achieved_eps / eps)
    return ({"successes": ok, "worst_ratio": worst},
            [Check("successes", ok, params["instances"], "equal")])


def random_split_instance(rng: np.random.Generator, N: int, p: float):
    """Interior ``a, b`` of ``Delta_p`` and ``z`` at distance ``eps/10`` from their midpoint."""
    while True:
        a = rng.dirichlet(np.ones(N)) * rng.uniform(0.3, 0.95)
        b = rng.dirichlet(np.ones(N)) * rng.uniform(0.3, 0.95)
        eps = rng.uniform(0.01, 0.5)
        d = rng.standard_normal(N)
        d *= (eps / 10) / spaces.lp_norm(d, p)
        z = 0.5 * (a + b) + d
        if z.min() >= 0 and z.sum() <= 1:
            return a, b, z, eps


@register("deltap-property-iii-failure", "stability",
          "unique representing measures of x_n on {0, e_i}",
          "|x_n|_p -> 0 while the mass at 0 stays 0", p=2.0, ns=[1, 4, 16, 64, 256, 1024])
def _prop_iii(params, seed, tol):
    norms, zero_mass = [], []
    for n in params["ns"]:
        x = np.full(n, 1.0 / n)
        mu = stability.delta_p_extreme_measure(x)
        norms.append(spaces.lp_norm(x, params["p"]))
        zero_mass.append(float(mu.weights[0]))
    return ({"norms": norms, "mass_at_zero": zero_mass},
            [Check("last_norm", norms[-1], 1 / math.sqrt(params["ns"][-1]), tol=1e-15),
             Check("max_mass_at_zero", max(zero_mass), 0.0, "equal")])


@register("ext-rep-separator", "stability", "f = -a^2 with a = <., x1 - x2>",
          "gaps 1 and 4")
def _separator(params, seed, tol):
    g1 = stability.extreme_point_separator([0.5, 0.5], [1.0, 0.0], [0.0, 1.0]).gap
    g2 = stability.extreme_point_separator([1.0, 0.0], [2.0, 0.0], [0.0, 0.0]).gap
    return {"gaps": [g1, g2]}, [Check("gap_e1_e2", g1, 1.0, tol=1e-15),
                                Check("gap_2e1_0", g2, 4.0, tol=1e-15)]


# --- mu_cert -------------------------------------------------------------------


@register("deltap-not-mu-compact", "mu_cert", "block construction with L = ceil(r^(1/(p-1)))",
          "outside mass 1 and power sum <= 1/r for every prefix",
          p=2.0, r=4, prefixes=[0, 10, 100, 1000, 10000])
def _deltap(params, seed, tol):
    p, r = params["p"], params["r"]
    masses, sums = [], []
    for N in params["prefixes"]:
        w = cert.delta_p_refute(p, r=r, prefix_N=N)
        masses.append(w.outside_mass)
        sums.append(w.details["power_sum"])
    return ({"outside_mass": masses, "power_sum": sums},
            [Check("min_outside_mass", min(masses), 1.0, "equal"),
             Check("max_power_sum", max(sums), 1 / r, "le", 1e-12)])


@register("ap-not-pointwise-mu-compact", "mu_cert", "harmonic point scaled below 1/3",
          "outside mass in (1/3, 2/3)", p=2.0, prefix_N=10, dim=10000)
def _ap(params, seed, tol):
    w = cert.ap_refute(params["p"], params["prefix_N"], params["dim"])
    desc = spaces.SetDescriptor.lp_cone(params["p"], params["dim"])
    atoms_ok = all(spaces.contains(desc, a) for a in w.decomposition.atoms)
    return ({"outside_mass": w.outside_mass, "excluded_prefix": w.excluded_prefix},
            [Check("outside_mass", w.outside_mass, [1 / 3, 2 / 3], "between"),
             Check("atoms_in_A_p", atoms_ok, True, "equal")])


@register("l1-cone-certificate", "mu_cert", "Markov bound for f_h with h_i = i",
          "no Fail over random decompositions", trials=200, max_dim=64, eps=0.1)
def _l1(params, seed, tol):
    rng = np.random.default_rng(seed)
    worst = 0.0
    fails = 0
    for _ in range(params["trials"]):
        N = int(rng.integers(2, params["max_dim"] + 1))
        x, mu = random_l1_decomposition(rng, N)
        chk = cert.tail_certificate_check(cert.increasing_weights(N), x, mu, params["eps"])
        fails += not chk.passed
        worst = max(worst, chk.outside_mass)
    return ({"fails": fails, "worst_outside_mass": worst},
            [Check("fails", fails, 0, "equal"),
             Check("worst_outside_mass", worst, params["eps"], "le", 1e-12)])


def random_l1_decomposition(rng: np.random.Generator, N: int):
    """A random finite decomposition over ``A_1`` (atoms from {0, e_i} and the interior)."""
    k = int(rng.integers(1, 2 * N + 2))
    atoms = np.zeros((k, N))
    for j in range(k):
        kind = rng.random()
        if kind < 0.4:
            atoms[j, rng.integers(N)] = 1.0
        elif kind < 0.5:
            pass
        else:
            atoms[j] = rng.dirichlet(np.ones(N)) * rng.random()
    mu = measures.FiniteMeasure(atoms, rng.dirichlet(np.ones(k)))
    return measures.barycenter(mu), mu


@register("hilbert-cube-divergent", "mu_cert", "greedy blocks with square sum >= 1",
          "refuted; blocks {1}, {2,3,4}", dim=4000)
def _cube_div(params, seed, tol):
    a = 1 / np.sqrt(np.arange(1, params["dim"] + 1))
    v = cert.hilbert_cube_classify(a)
    blocks = [list(b) for b in v.blocks[:2]]
    return ({"verdict": v.verdict, "first_blocks": blocks, "n_blocks": len(v.blocks)},
            [Check("verdict", v.verdict, "refuted", "equal"),
             Check("first_blocks", blocks, [[1, 1], [2, 4]], "equal")])


@register("hilbert-cube-summable", "mu_cert", "geometric tail", "compact", dim=200)
def _cube_sum(params, seed, tol):
    v = cert.hilbert_cube_classify(2.0 ** -np.arange(1, params["dim"] + 1))
    return {"verdict": v.verdict}, [Check("verdict", v.verdict, "compact", "equal")]


@register("cone-pointed-example", "mu_cert", "axis LP on three generators",
          "pointed with <g, a> > 0", generators=[[1, 0, 1], [0, 1, 1], [-1, -1, 1]])
def _cone(params, seed, tol):
    v = cones.pointed_cone_classify(params["generators"])
    margin = float(np.min(cones._normalized(params["generators"]) @ v.axis)) if v.pointed else 0.0
    return ({"classification": v.to_json(), "margin": margin},
            [Check("verdict", v.verdict, "pointed", "equal"),
             Check("margin", margin, 0.0, "ge", 0.0)])


@register("cone-equivalence-random", "mu_cert", "four independent LP/NNLS decisions",
          "all four verdicts agree on every instance", instances=100, d=3)
def _cone_eq(params, seed, tol):
    agree, pointed = 0, 0
    for i in range(params["instances"]):
        G, _ = cones.random_cone(np.random.default_rng([seed, i]), params["d"])
        rep = cones.polyhedral_equivalence_check(G, strict=False)
        agree += rep.agree
        pointed += rep.in_pointed_cone
    return ({"agreements": agree, "pointed": pointed},
            [Check("agreements", agree, params["instances"], "equal")])


# --- quantum_roof --------------------------------------------------------------


def _bell_mixture(w_plus=0.75):
    P = quantum.DensityMatrix.from_ket(quantum.bell_state("phi+"), (2, 2))
    M = quantum.DensityMatrix.from_ket(quantum.bell_state("phi-"), (2, 2))
    return quantum.DensityMatrix.mixture([(w_plus, P), (1 - w_plus, M)])


def _product(i, j):
    return quantum.DensityMatrix.from_ket(quantum.product_ket(i, j), (2, 2))


@register("phi-plus-f2", "quantum_roof", "pure state, reduced state I/2", "1 +- 1e-8")
def _phi_plus(params, seed, tol):
    omega = quantum.DensityMatrix.from_ket(quantum.bell_state("phi+"), (2, 2))
    res = quantum.roof_optimize(omega, "alpha:2", quantum.RoofConfig(seed=seed))
    return {"result": res.to_json()}, [Check("upper_bound", res.upper_bound, 1.0,
                                             tol=_t(tol, 1e-8))]


@register("separable-mixture-f2", "quantum_roof", "product eigen-decomposition",
          "<= 1e-8", restarts=4)
def _separable(params, seed, tol):
    omega = quantum.DensityMatrix.mixture([(0.5, _product(0, 0)), (0.5, _product(1, 1))])
    res = quantum.roof_optimize(omega, "alpha:2",
                                quantum.RoofConfig(restarts=params["restarts"], seed=seed))
    return {"result": res.to_json()}, [Check("upper_bound", res.upper_bound, 0.0, "le",
                                             _t(tol, 1e-8))]


@register("roof-bell-mixture-vs-sampling", "quantum_roof",
          "minimum over 10^6 sampled real isometries (0.25004)",
          "0.25 +- 1e-3", m=4, restarts=16)
def _bell(params, seed, tol):
    res = quantum.roof_optimize(_bell_mixture(), "alpha:2",
                                quantum.RoofConfig(m=params["m"], restarts=params["restarts"],
                                                   seed=seed))
    return ({"result": res.to_json(), "reconstruction_error": res.reconstruction_error()},
            [Check("upper_bound", res.upper_bound, 0.25, tol=_t(tol, 1e-3)),
             Check("reconstruction_error", res.reconstruction_error(), 0.0, "le", 1e-8)])


@register("roof-convexity-certificate", "quantum_roof", "concatenated decompositions",
          "certificate 0.5; optimiser on the mixture <= 0.5", restarts=8)
def _convexity(params, seed, tol):
    cfg = quantum.RoofConfig(restarts=params["restarts"], seed=seed)
    P = quantum.DensityMatrix.from_ket(quantum.bell_state("phi+"), (2, 2))
    r1 = quantum.roof_optimize(P, "alpha:2", cfg)
    r2 = quantum.roof_optimize(_product(0, 0), "alpha:2", cfg)
    certif = quantum.roof_convexity_certificate([(0.5, r1), (0.5, r2)])
    direct = quantum.roof_optimize(certif.state, "alpha:2", cfg)
    t = _t(tol, 1e-9)
    return ({"certificate": certif.upper_bound, "optimizer": direct.upper_bound},
            [Check("certificate", certif.upper_bound, 0.5, tol=t),
             Check("optimizer", direct.upper_bound, certif.upper_bound, "le", t)])
