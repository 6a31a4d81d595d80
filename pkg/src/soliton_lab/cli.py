"""Command-line front end.

    soliton-lab <verify|dualize|skrp|completeness>
                [--fixture NAME | --config FILE] [--samples N]
                [--tol-residual X] [--format json|csv|text] [--out PATH]

Reports are deterministic given the same configuration: sampling uses a
fixed seed (override with the SOLITON_LAB_SEED environment variable), the
seed is echoed into the report, and the JSON form contains no volatile
fields, so identical configs produce byte-identical JSON output.  Wall-clock
timings are shown in the text format only.

Exit codes: 0 all checks passed (or inconclusive), 1 a check failed,
2 usage error / unknown fixture, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import completeness as comp
from . import fixtures, skrp
from . import soliton as sol
from .errors import SolitonLabError, UnknownFixture
from .sampling import resolve_seed, sample_box

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

INVOLUTION_TOL = 1e-12
COEFF_AGREE_TOL = 1e-9
COEFF_EXTRACT_TOL = 1e-8
PROFILE_ODE_TOL = 1e-10
PROFILE_INTEGRATE_TOL = 1e-6
COEFF_CONSTANCY_TOL = 1e-8
ALPHA_FIT_TOL = 1e-5


@dataclass(frozen=True)
class RunConfig:
    command: str
    fixture: str | None = None
    params: skrp.SkrpParams | None = None
    samples: int = 200
    tol_residual: float = 1e-6
    fmt: str = "json"
    out: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.samples < 10:
            raise ValueError("sample count must be at least 10")
        if self.tol_residual <= 0:
            raise ValueError("tolerances must be positive")

    def echo(self) -> dict:
        cfg: dict = {
            "command": self.command,
            "samples": self.samples,
            "tol_residual": self.tol_residual,
            "format": self.fmt,
        }
        if self.fixture:
            cfg["fixture"] = self.fixture
        if self.params is not None:
            cfg["params"] = _params_dict(self.params)
        return cfg


def _params_dict(params: skrp.SkrpParams) -> dict:
    return {
        "m": params.m,
        "kappa": params.kappa,
        "c": params.c,
        "A": params.A,
        "B": params.B,
        "I": [_json_float(params.I[0]), _json_float(params.I[1])],
        "s": params.s,
        "a": params.a,
        "p": params.p,
        "phi_sign": params.phi_sign,
    }


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class CheckRecord:
    name: str
    status: str  # pass | fail | inconclusive
    measured: float | str | None = None
    tolerance: float | None = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "measured": _json_float(self.measured) if isinstance(self.measured, float) else self.measured,
            "tolerance": self.tolerance,
        }


@dataclass
class Report:
    config: RunConfig
    checks: list[CheckRecord] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def add(self, name: str, status: str, measured=None, tolerance=None) -> CheckRecord:
        rec = CheckRecord(name, status, measured, tolerance)
        self.checks.append(rec)
        return rec

    def add_bound(self, name: str, measured: float, tolerance: float) -> CheckRecord:
        return self.add(name, "pass" if measured < tolerance else "fail", measured, tolerance)

    @property
    def status(self) -> str:
        statuses = {c.status for c in self.checks}
        if "fail" in statuses:
            return "fail"
        if "inconclusive" in statuses:
            return "inconclusive"
        return "pass"

    def as_dict(self) -> dict:
        return {
            "artifact": {"name": "soliton-lab", "version": __version__},
            "command": self.config.command,
            "config": self.config.echo(),
            "seed": self.config.seed,
            "checks": [c.as_dict() for c in self.checks],
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"soliton-lab {__version__} :: {self.config.command} (seed {self.config.seed})"]
        for c in self.checks:
            meas = _fmt_value(c.measured)
            tol = "" if c.tolerance is None else f"  (tol {c.tolerance:g})"
            lines.append(f"  [{c.status.upper():12s}] {c.name}: {meas}{tol}")
        lines.append(f"status: {self.status}")
        if self.timings:
            lines.append("timings:")
            for k, v in self.timings.items():
                lines.append(f"  {k}: {v:.3f} s")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["name", "status", "measured", "tolerance"])
        for c in self.checks:
            writer.writerow(
                [
                    c.name,
                    c.status,
                    _fmt_value(c.measured),
                    "" if c.tolerance is None else f"{c.tolerance:.17g}",
                ]
            )
        return buf.getvalue()

    def render(self) -> str:
        if self.config.fmt == "json":
            return self.to_json()
        if self.config.fmt == "csv":
            return self.to_csv()
        return self.to_text()


def _fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_atomic(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".soliton-lab-")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(report: Report, profile_rows=None, plot_rows=None, profile_header=None) -> None:
    content = report.render()
    if report.config.out:
        _write_atomic(report.config.out, content)
        if profile_rows is not None:
            _write_atomic(report.config.out + ".profile.csv", _table_csv(profile_header, profile_rows))
        if plot_rows is not None:
            _write_atomic(report.config.out + ".plotdata.csv", _table_csv(("endpoint", "f", "integrand"), plot_rows))
    else:
        sys.stdout.write(content)


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- commands ------------------------------------------------------------------------


def _load_pair(config: RunConfig) -> sol.SolitonPair:
    if not config.fixture:
        raise UnknownFixture("verify/dualize need --fixture (or a config with a fixture name)")
    return fixtures.soliton_fixture(config.fixture)


def cmd_verify(config: RunConfig) -> Report:
    report = Report(config)
    t0 = time.perf_counter()
    pair = _load_pair(config)
    points = sample_box(pair.metric.domain, config.samples, seed=config.seed)
    residuals = sol.residual_report(pair, points)
    report.timings["residual-report"] = time.perf_counter() - t0

    report.add_bound("almost-soliton-residual", residuals.max_residual, config.tol_residual)
    report.add("coefficient-variation", "pass", residuals.coefficient_variation)
    cls = sol.classify(pair, points, tol_residual=config.tol_residual)
    report.add("classification", "pass" if cls is not sol.SolitonClass.NONE else "fail", cls.value)

    if config.fixture == "koiso-m2-A1B0":
        fit = sol.ricci_hessian_fit(pair, points[0])
        status = "pass" if fit.alpha_identifiable and abs(fit.alpha - 1.0) < ALPHA_FIT_TOL else "fail"
        report.add("ricci-hessian-alpha", status, fit.alpha, ALPHA_FIT_TOL)
    return report


def cmd_dualize(config: RunConfig) -> Report:
    report = Report(config)
    t0 = time.perf_counter()
    pair = _load_pair(config)
    dual = sol.dualize(pair)
    points = sample_box(pair.metric.domain, config.samples, seed=config.seed)
    dual_residuals = sol.residual_report(dual, points)
    report.timings["dual-residuals"] = time.perf_counter() - t0

    report.add_bound("dual-residual", dual_residuals.max_residual, config.tol_residual)
    report.add("dual-coefficient-variation", "pass", dual_residuals.coefficient_variation)

    t0 = time.perf_counter()
    double = sol.dualize(dual)
    spot = points[: min(len(points), 25)]
    involution = 0.0
    for p in spot:
        g0, g2 = pair.metric.matrix(p), double.metric.matrix(p)
        scale = np.max(np.abs(g0)) + 1.0
        involution = max(involution, float(np.max(np.abs(g2 - g0))) / scale, abs(double.f(p) - pair.f(p)))
    report.add_bound("involution-roundtrip", involution, INVOLUTION_TOL)

    agree = extract = 0.0
    for p in spot:
        direct = sol.dual_coefficient(pair, p, "direct", tol_residual=config.tol_residual)
        closed = sol.dual_coefficient(pair, p, "closed", tol_residual=config.tol_residual)
        scale = 1.0 + abs(direct)
        agree = max(agree, abs(direct - closed) / scale)
        extract = max(extract, abs(sol.extract_coefficient(dual, p)[0] - direct) / scale)
    report.add_bound("dual-coefficient-agreement", agree, COEFF_AGREE_TOL)
    report.add_bound("dual-coefficient-vs-extracted", extract, COEFF_EXTRACT_TOL)
    report.timings["duality-checks"] = time.perf_counter() - t0
    return report


def _resolve_params(config: RunConfig) -> skrp.SkrpParams:
    if config.params is not None:
        return config.params
    if config.fixture:
        return fixtures.skrp_fixture(config.fixture)
    raise UnknownFixture("skrp/completeness need --fixture or an inline parameter config")


def cmd_skrp(config: RunConfig) -> Report:
    report = Report(config)
    params = _resolve_params(config)
    t0 = time.perf_counter()
    positive = [iv for iv in skrp.q_domain(params)]
    if not positive:
        lo, hi = params.I
        lo = lo if math.isfinite(lo) else params.c - 10.0
        hi = hi if math.isfinite(hi) else params.c + 10.0
        probe = np.linspace(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo), 32)
        phis = [skrp.phi_closed(params, f)[0] for f in probe if abs(f - params.c) > params.pole_margin]
        if max(phis) <= 0:
            report.add("phi-positivity", "fail", max(phis))
        else:
            report.add("q-domain", "inconclusive", "empty")
        _emit(report, profile_rows=[], profile_header=("f", "phi", "dphi", "Q", "ell", "integrand"))
        return report

    lo, hi = positive[0]
    if not math.isfinite(hi):
        hi = params.c + 40.0
    if not math.isfinite(lo):
        lo = hi - 40.0
    width = hi - lo
    window = (lo + 0.02 * width, hi - 0.02 * width)
    anchor = 0.5 * (window[0] + window[1])
    ell = skrp.ell_map(params, anchor, bounds=window)

    grid = np.linspace(window[0], window[1], config.samples)
    # Identity checks run where float64 can resolve them: near the pole and
    # deep in an exponential tail the terms grow past 1e12 and the exact
    # cancellation drowns in roundoff.
    band = (max(window[0], params.c + 0.05), min(window[1], params.c + 12.0))
    check_grid = np.linspace(band[0], band[1], config.samples) if band[0] < band[1] else grid
    ode_res = max(abs(skrp.phi_ode_residual(params, 1.0, f)) for f in check_grid)
    report.add_bound("profile-ode-residual", ode_res, PROFILE_ODE_TOL)

    anchor_chk = 0.5 * (check_grid[0] + check_grid[-1])
    phi0, dphi0, _ = skrp.phi_closed(params, anchor_chk)
    integrate_err = 0.0
    for f in np.linspace(check_grid[0], check_grid[-1], 9):
        phi_num, _ = skrp.phi_ode_integrate(params, 1.0, anchor_chk, phi0, dphi0, f)
        phi_ref = skrp.phi_closed(params, f)[0]
        integrate_err = max(integrate_err, abs(phi_num - phi_ref) / (1.0 + abs(phi_ref)))
    report.add_bound("closed-vs-integrated", integrate_err, PROFILE_INTEGRATE_TOL)

    coeffs = [skrp.soliton_coeff_profile(params, 1.0, f) for f in check_grid]
    variation = (max(coeffs) - min(coeffs)) / (1.0 + max(abs(c) for c in coeffs))
    report.add_bound("coefficient-constancy", variation, COEFF_CONSTANCY_TOL)
    report.timings["profile-checks"] = time.perf_counter() - t0

    rows = []
    for f in grid:
        phi, dphi, _ = skrp.phi_closed(params, f)
        q = skrp.q_profile(params, f)
        rows.append((float(f), phi, dphi, q, ell.ell(f), comp.arc_integrand(params, f)))
    _emit(report, profile_rows=rows, profile_header=("f", "phi", "dphi", "Q", "ell", "integrand"))
    return report


def cmd_completeness(config: RunConfig) -> Report:
    report = Report(config)
    t0 = time.perf_counter()
    if config.params is not None:
        profile = skrp.as_q_profile(config.params)
    elif config.fixture:
        profile = fixtures.q_profile_fixture(config.fixture)
    else:
        raise UnknownFixture("completeness needs --fixture or an inline parameter config")

    verdict = comp.completeness_verdict(profile)
    report.timings["verdict"] = time.perf_counter() - t0
    for side, analysis in (("inf", verdict.lower), ("sup", verdict.upper)):
        report.add(f"endpoint-{side}-class", "pass", analysis.cls.value)
        if analysis.exponent is not None:
            report.add(f"endpoint-{side}-exponent", "pass", analysis.exponent.exponent)
    status = "inconclusive" if verdict.overall is comp.OverallVerdict.INCONCLUSIVE_AT_END else "pass"
    report.add("verdict", status, verdict.overall.value)

    rows = []
    profile_q = skrp.as_q_profile(profile) if not isinstance(profile, skrp.QProfile) else profile
    for side, analysis in (("inf", verdict.lower), ("sup", verdict.upper)):
        if not math.isfinite(analysis.endpoint):
            continue
        a = analysis.endpoint
        direction = 1.0 if side == "inf" else -1.0
        for off in np.geomspace(1e-6, 1e-1, 25):
            f = a + direction * off
            try:
                rows.append((side, float(f), comp.arc_integrand(profile_q, f)))
            except SolitonLabError:
                continue
    _emit(report, plot_rows=rows)
    return report


# -- entry point ----------------------------------------------------------------------


def _parse_config_file(path: str) -> tuple[str | None, skrp.SkrpParams | None]:
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if "fixture" in doc:
        return str(doc["fixture"]), None
    interval = doc.get("I", (-math.inf, math.inf))
    lo, hi = (float(v) for v in interval)
    params = skrp.SkrpParams(
        m=int(doc["m"]),
        kappa=float(doc.get("kappa", 0.0)),
        c=float(doc.get("c", 0.0)),
        A=float(doc.get("A", 0.0)),
        B=float(doc.get("B", 0.0)),
        I=(lo, hi),
        s=int(doc.get("s", 1)),
        a=float(doc.get("a", 1.0)),
        p=float(doc.get("p", 1.0)),
        phi_sign=int(doc.get("phi_sign", -1)),
    )
    return None, params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soliton-lab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("verify", "almost-soliton residual report for a fixture pair"),
        ("dualize", "conformal duality checks: residuals, coefficients, involution"),
        ("skrp", "closed-form profile checks and profile table"),
        ("completeness", "endpoint classification and completeness verdict"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--fixture", help="named fixture (see README for the list)")
        cmd.add_argument("--config", help="JSON config: {'fixture': ...} or inline profile parameters")
        cmd.add_argument("--samples", type=int, default=200)
        cmd.add_argument("--tol-residual", type=float, default=1e-6)
        cmd.add_argument("--format", choices=("json", "csv", "text"), default="json")
        cmd.add_argument("--out", help="write the report here (atomically); default stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fixture, params = args.fixture, None
    if args.config:
        cfg_fixture, params = _parse_config_file(args.config)
        fixture = fixture or cfg_fixture

    try:
        config = RunConfig(
            command=args.command,
            fixture=fixture,
            params=params,
            samples=args.samples,
            tol_residual=args.tol_residual,
            fmt=args.format,
            out=args.out,
            seed=resolve_seed(),
        )
    except ValueError as exc:
        print(f"soliton-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE

    handler = {
        "verify": cmd_verify,
        "dualize": cmd_dualize,
        "skrp": cmd_skrp,
        "completeness": cmd_completeness,
    }[config.command]

    try:
        report = handler(config)
    except UnknownFixture as exc:
        print(f"soliton-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolitonLabError as exc:
        diagnostic = {
            "artifact": {"name": "soliton-lab", "version": __version__},
            "command": config.command,
            "error": {"type": type(exc).__name__, "message": str(exc)},
            "status": "error",
        }
        print(json.dumps(diagnostic, sort_keys=True, indent=2), file=sys.stderr)
        return EXIT_NUMERIC

    if config.command in ("verify", "dualize"):
        _emit(report)
    return EXIT_FAIL if report.status == "fail" else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
