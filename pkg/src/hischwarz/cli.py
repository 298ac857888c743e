"""Command-line entry point.

Exit codes: 0 all checks pass, 1 some check fails, 2 only degenerate
anomalies, 3 usage error.  Every option can also be set through an
environment variable ``HISCHWARZ_<COMMAND>_<OPTION>``, e.g.
``HISCHWARZ_RUN_SEED=11``.
"""

from __future__ import annotations

import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .equivariant import regular_paired_points, fit_representation, main_theorem_verify, parse_function, sample_regular_cases
from .errors import DegenerateConfiguration, HiSchwarzError
from .moebius import MoebiusMap, moebius_jet, word_to_matrix
from .quasimodular import (
    adopted_kappa,
    e2_components,
    e2_squared_components,
    eisenstein_q,
    eisenstein_weight,
    modular_components,
    qm_transform_check,
    sl2_commutator_check,
)
from .report import DEGENERATE, PASS
from .runner import ALL, EXIT_DEGENERATE, EXIT_FAIL, EXIT_PASS, EXIT_USAGE, SUITES, RunConfig, emit, fitted_constants, run_suite
from .sampling import sample_cases
from .schwarzian import aharonov_direct, methods_agreement
from .series import encode_number, exp_jet, jet_from_json, jet_from_qseries

ENV_PREFIX = "HISCHWARZ"


def _dump(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _verdict_code(verdict: str) -> int:
    return {PASS: EXIT_PASS, DEGENERATE: EXIT_DEGENERATE}.get(verdict, EXIT_FAIL)


def _print_version(ctx, _param, value):
    if not value or ctx.resilient_parsing:
        return
    _dump({"hischwarz": __version__, **fitted_constants()})
    ctx.exit(0)


@click.group(context_settings={"help_option_names": ["-h", "--help"], "show_default": True})
@click.option("--version", is_flag=True, expose_value=False, is_eager=True, callback=_print_version,
              help="Print the version and the fitted constants kappa and lambda.")
def cli():
    """Higher Schwarzian derivatives, quasimodular forms and equivariant functions."""


# ---------------------------------------------------------------------------
# run


@cli.command()
@click.argument("suite", type=click.Choice(SUITES + (ALL,)))
@click.option("--seed", type=int, default=0)
@click.option("--q-order", type=int, default=40)
@click.option("--jet-order", type=int, default=None)
@click.option("--tol-rel", type=float, default=1e-8)
@click.option("--tol-theorem", type=float, default=1e-7)
@click.option("--height-min", type=float, default=1.0)
@click.option("--height-max", type=float, default=2.0)
@click.option("--words", type=int, default=5)
@click.option("--points", type=int, default=10)
@click.option("--workers", type=int, default=1)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Report path (.json).")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              help="csv also writes a flattened per-case table next to the JSON report.")
def run(suite, seed, q_order, jet_order, tol_rel, tol_theorem, height_min, height_max, words, points,
        workers, output, fmt):
    """Run a verification suite and print its aggregate."""
    cfg = RunConfig(seed=seed, q_order=q_order, jet_order=jet_order, tol_rel=tol_rel, tol_theorem=tol_theorem,
                    height_range=(height_min, height_max), words=words, points=points, workers=workers,
                    output=output, fmt=fmt)
    report = run_suite(suite, cfg)
    emit(report, cfg)
    _dump({"suite": suite, "aggregate": report.aggregate, "suites": report.breakdown()})
    return report.exit_code


# ---------------------------------------------------------------------------
# schwarzian


@cli.group()
def schwarzian():
    """Aharonov invariants of a single function."""


def _parse_point(text: str, domain: str):
    try:
        re_s, im_s = text.split(",")
    except ValueError:
        raise click.BadParameter("expected RE,IM", param_hint="--point")
    if domain == "rational":
        if Fraction(im_s) != 0:
            raise click.BadParameter("the rational domain needs a real rational point", param_hint="--point")
        return Fraction(re_s)
    return complex(float(re_s), float(im_s))


def _function_jet(spec: str, point, order: int, domain: str, q_order: int):
    parts = re.split(r"[\s:]+", spec.strip(), maxsplit=1)
    kind, rest = parts[0], parts[1] if len(parts) > 1 else ""
    if kind == "exp":
        return exp_jet(order, point, exact=domain == "rational")
    if kind == "moebius":
        nums = re.split(r"[\s,]+", rest.strip())
        if len(nums) != 4:
            raise click.BadParameter("moebius needs four entries a b c d", param_hint="--function")
        conv = Fraction if domain == "rational" else complex
        return moebius_jet(MoebiusMap(*(conv(x) for x in nums)), point, order)
    if kind in ("qform", "rational"):
        if domain == "rational":
            raise click.BadParameter(f"{kind} functions are only available in the complex domain",
                                     param_hint="--domain")
        if kind == "rational":
            return parse_function(f"rational:{rest.strip()}", q_order).jet_at(point, order)
        name = rest.strip()
        return jet_from_qseries(eisenstein_q(name, q_order), point, order, eisenstein_weight(name))
    if kind == "file":
        return jet_from_json(json.loads(Path(rest.strip()).read_text()))
    raise click.BadParameter(f"unknown function {spec!r}", param_hint="--function")


@schwarzian.command()
@click.option("--function", "function", required=True,
              help="exp | 'moebius a b c d' | 'qform E4' | 'rational E4' | 'file jet.json'")
@click.option("--point", default="0,0", help="Base point RE,IM.")
@click.option("--n", "n", type=click.IntRange(1, None), default=6)
@click.option("--domain", type=click.Choice(["rational", "complex"]), default="complex")
@click.option("--q-order", type=int, default=40)
def compute(function, point, n, domain, q_order):
    """Compute S_1 .. S_n at a point by the direct and recursive routes."""
    z0 = _parse_point(point, domain)
    jet = _function_jet(function, z0, n + 3, domain, q_order)
    S = aharonov_direct(jet, n)
    _dump({"S": [encode_number(v) for v in S.values], "method_agreement": methods_agreement(jet, n),
           "domain": domain})
    return EXIT_PASS


# ---------------------------------------------------------------------------
# qm


@cli.group()
def qm():
    """Eisenstein series and quasimodular checks."""


@qm.command()
@click.option("--which", type=click.Choice(["E2", "E4", "E6"]), default="E2")
@click.option("--order", type=click.IntRange(0, None), default=40)
def eisenstein(which, order):
    """Print the q-expansion coefficients a_0 .. a_order."""
    s = eisenstein_q(which, order)
    _dump({"which": which, "order": order, "coeffs": [int(c) for c in s.coeffs]})
    return EXIT_PASS


_FORMS = {
    "E2": lambda o: e2_components(order=o),
    "E2^2": lambda o: e2_squared_components(order=o),
    "E4": lambda o: modular_components("E4", o),
    "E6": lambda o: modular_components("E6", o),
}


def _kappa_json():
    k = adopted_kappa().numeric
    return [k.real, k.imag]


@qm.command()
@click.option("--form", type=click.Choice(sorted(_FORMS)), default="E2")
@click.option("--samples", type=click.IntRange(1, None), default=50)
@click.option("--seed", type=int, default=7)
@click.option("--tol", type=float, default=1e-8)
@click.option("--q-order", type=int, default=40)
def check(form, samples, seed, tol, q_order):
    """Check the quasimodular transformation law on random (g, z)."""
    comps = _FORMS[form](q_order)
    cases = sample_cases(np.random.default_rng(seed), samples, 1)
    worst = max(qm_transform_check(comps, c.g, c.z) for c in cases)
    _dump({"form": form, "residual_max": worst, "samples": len(cases), "kappa": _kappa_json(), "tol": tol})
    return EXIT_PASS if worst <= tol else EXIT_FAIL


@qm.command()
@click.option("--max-weight", type=click.IntRange(0, None), default=20)
def sl2(max_weight):
    """Check the sl2 commutator relations on all monomials up to a weight."""
    rep = sl2_commutator_check(max_weight)
    d = rep.details
    _dump({"residual_max": rep.max_residual, "samples": d["monomials"], "kappa": _kappa_json(),
           "status": rep.status, "relations": d["relations"], "containment_failures": d["containment_failures"]})
    return _verdict_code(rep.status)


# ---------------------------------------------------------------------------
# equiv


@cli.group()
def equiv():
    """Equivariant functions and the S_n transformation law."""


def _parse_range(text: str) -> list[int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise click.BadParameter("expected N or A..B", param_hint="--n")
    lo = int(m.group(1))
    hi = int(m.group(2) or lo)
    if lo < 2 or hi < lo:
        raise click.BadParameter("need 2 <= A <= B", param_hint="--n")
    return list(range(lo, hi + 1))


@equiv.command()
@click.option("--h", "h_spec", default="rational:E4", help="rational:E4 | rational:E6 | exp | identity | moebius:a,b,c,d")
@click.option("--n", "n_text", default="2..6")
@click.option("--words", type=click.IntRange(1, None), default=5)
@click.option("--points", type=click.IntRange(1, None), default=10)
@click.option("--seed", type=int, default=11)
@click.option("--tol", type=float, default=1e-7)
@click.option("--q-order", type=int, default=40)
@click.option("--jet-order", type=int, default=None)
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
def verify(h_spec, n_text, words, points, seed, tol, q_order, jet_order, json_path):
    """Check the S_n transformation law on random words and points."""
    n_range = _parse_range(n_text)
    h = parse_function(h_spec, q_order)
    cases = sample_regular_cases(np.random.default_rng(seed), h, words, points)
    rep = main_theorem_verify(h, n_range, cases, jet_order, tol)
    summary = {"per_n": {str(n): r for n, r in sorted(rep.per_n.items())}, "verdict": rep.verdict,
               "function": h.label, "cases": len(cases)}
    if json_path:
        Path(json_path).write_text(json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n")
    _dump(summary)
    return _verdict_code(rep.verdict)


@equiv.command("fit-rho")
@click.option("--h", "h_spec", default="rational:E6")
@click.option("--word", default="TST", help="Letters T, t (T^-1), S, s (S^-1).")
@click.option("--points", type=click.IntRange(5, None), default=8)
@click.option("--seed", type=int, default=0)
@click.option("--tol", type=float, default=1e-6)
@click.option("--q-order", type=int, default=40)
def fit_rho(h_spec, word, points, seed, tol, q_order):
    """Fit rho(g) from h(gz) = rho(g) h(z) and compare it with g."""
    h = parse_function(h_spec, q_order)
    try:
        g = word_to_matrix(word)
    except (KeyError, ValueError):
        raise click.BadParameter(f"bad word {word!r}", param_hint="--word")
    pts = regular_paired_points(h, g, np.random.default_rng(seed), points, 0.25)
    fit = fit_representation(h, g, pts)
    dev = fit.deviation_from(g)
    _dump({"word": word, "g": g.to_json(), "rho": fit.matrix.to_json(), "deviation": dev,
           "holdout_residual": fit.residual})
    return EXIT_PASS if dev <= tol else EXIT_FAIL


# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="hischwarz", standalone_mode=False, auto_envvar_prefix=ENV_PREFIX)
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except DegenerateConfiguration as exc:
        click.echo(f"degenerate: {exc}", err=True)
        return EXIT_DEGENERATE
    except (HiSchwarzError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
