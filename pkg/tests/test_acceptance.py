"""Acceptance suite: ten end-to-end criteria, each with a tolerance and a runtime budget.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are also
collected into the pytest terminal summary.  Run ``python tests/test_acceptance.py``
to get only the ten lines.
"""

import contextlib
import functools
import io as stdio
import json
import time
from fractions import Fraction

import numpy as np

from coinduct import cli, markov, mdp, nwf, streams
from coinduct.fixpoint import cauchy_bound, orbit
from coinduct.io import apg_to_dict
from coinduct.nwf import DyadicDistance

from generators import random_apg, random_ergodic_chain, random_mdp, random_prob_policy
from oracles import naive_bisimulation, stationary_by_solve

SEED = 7_2024
RESULTS: dict[int, str] = {}


def criterion(number: int, title: str, budget: float):
    """Time the check, enforce the runtime budget, and record a one-line verdict."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            detail = ""
            ok = True
            try:
                detail = fn(*args, **kwargs) or ""
            except AssertionError as exc:
                ok = False
                detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
                raise
            finally:
                elapsed = time.perf_counter() - start
                if ok and elapsed >= budget:
                    ok = False
                    detail = f"over budget: {elapsed:.2f}s >= {budget}s"
                line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title} ({elapsed:.2f}s / {budget}s) {detail}".rstrip()
                RESULTS[number] = line
                print(line)
            assert elapsed < budget, f"criterion {number} took {elapsed:.2f}s (budget {budget}s)"

        return run

    return wrap


# --- shared fixtures ------------------------------------------------------------------

def _chains():
    rng = np.random.default_rng(SEED)
    return [random_ergodic_chain(rng, int(rng.integers(2, 9)), float(rng.uniform(0.3, 1.0))) for _ in range(10)]


def _mdps():
    rng = np.random.default_rng(SEED + 1)
    return [
        random_mdp(rng, int(rng.integers(1, 5)), 3, (0.5, 0.9)[i % 2])
        for i in range(20)
    ]


def _apg_pairs(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        out.append(tuple(random_apg(rng, 8, float(rng.uniform(0.0, 0.35))) for _ in range(2)))
    return out


# --- criteria -------------------------------------------------------------------------

@criterion(1, "Banach bound on the halving map and 3 random affine contractions", 1.0)
def test_banach_bound():
    rng = np.random.default_rng(SEED)
    maps = [(Fraction(1, 2), Fraction(0), Fraction(1))]
    for _ in range(3):
        a = Fraction(float(rng.uniform(-0.95, 0.95))).limit_denominator(1000)
        b = Fraction(float(rng.uniform(-5, 5))).limit_denominator(1000)
        x0 = Fraction(float(rng.uniform(-10, 10))).limit_denominator(1000)
        maps.append((a, b, x0))
    checked = 0
    for a, b, x0 in maps:
        c = abs(a)
        pts = orbit(lambda x: a * x + b, x0, 61)
        d1 = abs(pts[1] - pts[0])
        for n in range(31):
            for m in range(1, 31):
                measured = abs(pts[n + m] - pts[n])
                bound = cauchy_bound(c, n, m, d1)
                assert measured <= bound, f"map {a}x+{b}: d(u_{n + m}, u_{n}) = {float(measured)} > {float(bound)}"
                checked += 1
    return f"{checked} (n, m) pairs, exact rationals"


@criterion(2, "Stream inverse laws on 100 cyclic generators, depth 1024", 5.0)
def test_stream_inverse_laws():
    rng = np.random.default_rng(SEED)
    alphabet = "abcd"
    gens = []
    for _ in range(100):
        cyc = [alphabet[i] for i in rng.integers(0, 4, size=int(rng.integers(1, 12)))]
        pre = [alphabet[i] for i in rng.integers(0, 4, size=int(rng.integers(0, 6)))]
        gens.append(streams.cyclic(cyc, pre))
    k = 1024
    for i, s in enumerate(gens):
        t = gens[(i + 1) % len(gens)]
        ps = streams.unfold(s, k)
        assert streams.unfold(streams.merge(*streams.split(s)), k) == ps, f"merge(split(s)) != s for generator {i}"
        left, right = streams.split(streams.merge(s, t))
        assert streams.unfold(left, k) == ps, f"split(merge(s, t))[0] != s for generator {i}"
        assert streams.unfold(right, k) == streams.unfold(t, k), f"split(merge(s, t))[1] != t for generator {i}"
    return "100 generators"


@criterion(3, "Stationary distribution vs direct linear solve on 10 ergodic chains", 5.0)
def test_stationary_convergence():
    worst_dev = worst_res = 0.0
    for chain in _chains():
        res = markov.stationary_distribution(chain, 1e-10)
        dev = float(np.abs(res.u - stationary_by_solve(chain.P)).max())
        residual = float(np.abs(res.u @ chain.P - res.u).max())
        assert dev <= 1e-9, f"n={chain.n}: deviation from linear solve {dev:.3e}"
        assert residual <= 1e-10, f"n={chain.n}: residual {residual:.3e}"
        worst_dev, worst_res = max(worst_dev, dev), max(worst_res, residual)
    return f"max deviation {worst_dev:.1e}, max residual {worst_res:.1e}"


@criterion(4, "u_M vs 1/mu_t at M = 200 and renewal residuals", 10.0)
def test_recurrence_limit():
    M = 200
    used = checked = 0
    worst_lim = worst_ren = 0.0
    misses = []
    for ci, chain in enumerate(_chains()):
        if markov.spectral_gap_estimate(chain) > 0.7:
            continue
        used += 1
        PM = np.linalg.matrix_power(chain.P, M)
        for t in range(chain.n):
            rep = markov.recurrence_report(chain, t, M)
            lim = abs(PM[t, t] - 1.0 / rep.mu_partial)
            checked += 1
            if lim > 1e-4:
                misses.append(f"chain {ci} (n={chain.n}) t={t}: {lim:.1e} (sum f_m = {rep.f.sum():.4f})")
            assert rep.renewal_residual <= 1e-12, f"n={chain.n}, t={t}: renewal residual {rep.renewal_residual:.3e}"
            worst_lim, worst_ren = max(worst_lim, lim), max(worst_ren, rep.renewal_residual)
    assert used > 0, "no chain met the spectral radius filter"
    assert not misses, (
        f"|P^M_tt - 1/mu_t(M)| > 1e-4 for {len(misses)}/{checked} states, worst {worst_lim:.1e}; "
        f"first-return mass beyond M is missing from mu_t(M): " + "; ".join(misses)
    )
    return f"{used} chains, max |u_M - 1/mu| {worst_lim:.1e}, max renewal {worst_ren:.1e}"


def _policy_value_solve(m, policy):
    P = np.array([m.kernel[x][d] for x, d in enumerate(policy)])
    r = np.array([m.rewards[x][d] for x, d in enumerate(policy)])
    return np.linalg.solve(np.eye(m.n_states) - m.discount * P, r)


@criterion(5, "Optimal value vs brute-force enumeration on 20 MDPs", 30.0)
def test_mdp_optimality():
    worst = 0.0
    for m in _mdps():
        v = mdp.optimal_value(m, 1e-10)
        best, _ = mdp.brute_force_optimal(m)
        gap = float(np.abs(v - best).max())
        assert gap <= 1e-7, f"sup |v* - brute force| = {gap:.3e}"
        for pol in m.policies():
            v_d = _policy_value_solve(m, pol)
            assert np.all(v_d <= v + 1e-7), f"policy {pol} exceeds v*"
        worst = max(worst, gap)
    return f"max gap {worst:.1e}"


@criterion(6, "Derandomized policies dominate 100 random strategies", 30.0)
def test_derandomization():
    rng = np.random.default_rng(SEED + 2)
    worst = np.inf
    for m in _mdps():
        for _ in range(5):
            mu = random_prob_policy(rng, m)
            v_mu = mdp.prob_policy_value(m, mu, 1e-10)
            delta = mdp.derandomize(m, mu, 1e-10)
            v_d = mdp.policy_value(m, delta, 1e-10)
            margin = float((v_d - v_mu).min())
            assert margin >= -1e-7, f"v_delta falls below v_mu by {-margin:.3e}"
            worst = min(worst, margin)
    return f"min(v_delta - v_mu) = {worst:.1e}"


@criterion(7, "d(numeral n, Omega) = 2^-n for n = 0..20 through `nwf distance`", 1.0)
def test_numeral_omega_cli(tmp_path):
    omega = tmp_path / "omega.json"
    omega.write_text(json.dumps({"nodes": ["w"], "children": {"w": ["w"]}, "root": "w"}))
    for n in range(21):
        path = tmp_path / f"n{n}.json"
        path.write_text(json.dumps(apg_to_dict(nwf.numeral(n))))
        buf = stdio.StringIO()
        with contextlib.redirect_stdout(buf):
            code = cli.main(["nwf", "distance", str(path), str(omega)])
        assert code == 0, f"n={n}: exit code {code}"
        got = DyadicDistance.parse(buf.getvalue()).as_fraction()
        assert got == Fraction(1, 2**n), f"n={n}: printed {buf.getvalue().strip()}"
    return "21 exact matches"


@criterion(8, "Pseudometric axioms and separation on 200 random APGs", 10.0)
def test_pseudometric_axioms():
    rng = np.random.default_rng(SEED + 3)
    samples = [random_apg(rng, 8, float(rng.uniform(0.0, 0.35))) for _ in range(200)]
    rep = nwf.pseudometric_axioms_report(samples)
    assert rep.ok, f"axioms failed: {rep.failures[:3]}"
    # separation once more against the naive greatest-bisimulation oracle on a sample of pairs
    D = nwf.distance_matrix(samples)
    zeros = [(i, j) for i in range(200) for j in range(i + 1, 200) if D[i][j].is_zero]
    others = [tuple(p) for p in rng.integers(0, 200, size=(300, 2))]
    for i, j in zeros + others:
        assert D[i][j].is_zero == naive_bisimulation(samples[i], samples[j]), f"separation fails for ({i}, {j})"
    return f"{len(zeros)} distance-0 pairs, {len(others)} sampled pairs cross-checked"


@criterion(9, "tau iteration within 2^-k of the exact distance (k = 5, 10, 20)", 10.0)
def test_tau_oracle():
    for g1, g2 in _apg_pairs(50, SEED + 4):
        d = float(nwf.distance(g1, g2))
        for k in (5, 10, 20):
            err = abs(nwf.tau_iterate(g1, g2, k).root - d)
            assert err <= 2.0**-k, f"k={k}: |tau - d| = {err}"
    return "50 pairs"


@criterion(10, "Level characterization: approx_equiv at n iff d <= 2^-n", 10.0)
def test_level_characterization():
    checks = 0
    for g1, g2 in _apg_pairs(50, SEED + 5):
        d = nwf.distance(g1, g2).as_fraction()
        for n in range(len(g1) + len(g2) + 1):
            assert nwf.approx_equiv(g1, g2, n) == (d <= Fraction(1, 2**n)), f"level {n} disagrees"
            checks += 1
    return f"{checks} (pair, level) checks"


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for fn in (test_banach_bound, test_stream_inverse_laws, test_stationary_convergence, test_recurrence_limit,
               test_mdp_optimality, test_derandomization, test_numeral_omega_cli, test_pseudometric_axioms,
               test_tau_oracle, test_level_characterization):
        try:
            if fn is test_numeral_omega_cli:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
