"""psilab command-line harness.

Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
Settings resolve as command-line flag, then PSILAB_CACHE_DIR (cache only),
then the ``--config`` file (``key = value`` lines), then defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .errors import FormatError, NumericError, PsilabError, ZeroFileError
from .models import (
    AsymptoticHypothesis,
    admissible_ranges,
    c_from_c_prime,
    envelope_E,
    envelope_E_tilde,
    envelope_R_ab,
    j_main_term,
    r_main_term,
    reports_to_csv,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

COMMANDS = ("sieve-cache", "expsum", "variance", "paircorr", "models", "verify", "scan")

DEFAULTS = {
    "X": 10_000,
    "h": None,
    "xi": None,
    "eta": None,
    "T": None,
    "a": 0.0,
    "b": 3.0,
    "c": -4.0,
    "zeros_file": None,
    "cache_dir": None,
    "out": None,
    "format": "json",
    "threads": 1,
    "method": None,
    "tail_eps": 1e-12,
}
# keys whose values never change results; kept out of the echoed config
_NOT_ECHOED = ("threads", "out", "config")


class UsageError(PsilabError, ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psilab", description="Primes in short intervals toolkit.")
    p.add_argument("--version", action="version", version=f"psilab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="file of key = value settings")
    # numeric flags are parsed after precedence is resolved; SUPPRESS keeps
    # unset flags out of the namespace
    S = argparse.SUPPRESS
    for name in ("X", "h", "xi", "eta", "T", "a", "b", "c", "tail-eps"):
        p.add_argument(f"--{name}", default=S)
    p.add_argument("--zeros-file", default=S)
    p.add_argument("--cache-dir", default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--format", choices=("csv", "json"), default=S)
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--method", default=S)
    return p


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in text.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(argv) -> dict:
    ns = vars(build_parser().parse_args(argv))
    cfg = dict(DEFAULTS)
    if ns.get("config"):
        cfg.update(read_config_file(ns["config"]))
    if os.environ.get("PSILAB_CACHE_DIR"):
        cfg["cache_dir"] = os.environ["PSILAB_CACHE_DIR"]
    cfg.update({k: v for k, v in ns.items() if k not in ("command", "config")})
    cfg["command"] = ns["command"]
    return _coerce(cfg)


def _coerce(cfg: dict) -> dict:
    out = dict(cfg)
    try:
        if cfg["command"] == "scan":
            out["X"] = [int(float(v)) for v in _number_list(cfg["X"])]
            out["h"] = _number_list(cfg["h"]) if cfg["h"] is not None else None
        else:
            out["X"] = int(float(cfg["X"]))
            out["h"] = None if cfg["h"] is None else float(cfg["h"])
        for k in ("xi", "eta", "T"):
            out[k] = None if cfg[k] is None else float(cfg[k])
        for k in ("a", "b", "c", "tail_eps"):
            out[k] = float(cfg[k])
        out["threads"] = int(cfg["threads"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad numeric setting: {exc}") from None
    if out["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    if out["format"] not in ("csv", "json"):
        raise UsageError(f"unknown format {out['format']!r}")
    return out


def _echo(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg) if k not in _NOT_ECHOED and cfg[k] is not None}


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{cfg['command']} needs --{', --'.join(missing)}")


def _hypothesis(cfg) -> AsymptoticHypothesis:
    return AsymptoticHypothesis(a=cfg["a"], b=cfg["b"], c=cfg["c"])


def _table(cfg, limit):
    from .primes import cached_table

    return cached_table(limit, cfg["cache_dir"], threads=cfg["threads"])


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _emit_reports(cfg, reports, extra=None) -> str:
    if cfg["format"] == "json":
        body = {"config": _echo(cfg), "reports": [r.to_dict() for r in reports]}
        if extra:
            body.update(extra)
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    lines = [f"# {k} = {v}" for k, v in _echo(cfg).items()]
    for k, v in (extra or {}).items():
        lines.append(f"# {k} = {v}")
    return "\n".join(lines) + "\n" + reports_to_csv(reports)


def _emit_mapping(cfg, data: dict) -> str:
    if cfg["format"] == "json":
        return json.dumps({"config": _echo(cfg), "result": data}, indent=2,
                          sort_keys=True) + "\n"
    lines = [f"# {k} = {v}" for k, v in _echo(cfg).items()]
    lines.append("key,value")
    lines += [f"{k},{data[k]!r}" for k in sorted(data)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sieve_cache(cfg):
    from .primes import psi, psi_rh_ratio

    X = cfg["X"]
    table = _table(cfg, X)
    data = {"X": X, "psi_X": psi(table, X), "prime_powers": int((table.lam > 0).sum())}
    if X >= 100:
        data["psi_rh_ratio"] = psi_rh_ratio(table, X)
    if cfg["cache_dir"]:
        data["cache_file"] = str(Path(cfg["cache_dir"]) / f"mangoldt_{X}.bin")
    return _emit_mapping(cfg, data), EXIT_OK


def cmd_expsum(cfg):
    from .expsum import build_grid
    from .models import mean_square_asymptotic_report

    X = cfg["X"]
    xi = cfg["xi"] if cfg["xi"] is not None else X ** -0.4
    cfg = dict(cfg, xi=xi)
    grid = build_grid(_table(cfg, X), X=X)
    return _emit_reports(cfg, [mean_square_asymptotic_report(grid, X, xi, _hypothesis(cfg))]), EXIT_OK


def cmd_variance(cfg):
    from .expsum import build_grid
    from .models import variance_asymptotic_report
    from .variance import moment_residual, tilde_cutoff

    _require(cfg, "h")
    X, h = cfg["X"], cfg["h"]
    method = cfg["method"] or "asymptotic"
    if method == "asymptotic":
        table = _table(cfg, X + math.ceil(h) + 1)
        report = variance_asymptotic_report(table, build_grid(table, X=X), X, h, _hypothesis(cfg))
    elif method == "moment":
        table = _table(cfg, X + math.ceil(h) + 1)
        report = moment_residual(table, build_grid(table, X=X), X, h, "plain")
    elif method == "moment-smoothed":
        from .expsum import smoothed_length

        x_max, _ = tilde_cutoff(X, h, cfg["tail_eps"])
        limit = max(smoothed_length(X, cfg["tail_eps"]), x_max + math.ceil(h) + 1)
        table = _table(cfg, limit)
        grid = build_grid(table, X=X, smoothed=True, tail_eps=cfg["tail_eps"])
        report = moment_residual(table, grid, X, h, "smoothed", cfg["tail_eps"])
    else:
        raise UsageError(f"unknown variance method {method!r}")
    return _emit_reports(dict(cfg, method=method), [report]), EXIT_OK


def cmd_paircorr(cfg):
    from .paircorr import compute_F, f_residual, load_zeros

    _require(cfg, "zeros_file", "T")
    X = float(cfg["X"])
    zeros = load_zeros(cfg["zeros_file"])
    method = cfg["method"] or "naive"
    if method not in ("naive", "integral", "both"):
        raise UsageError(f"unknown paircorr method {method!r}")
    primary = "integral" if method == "integral" else "naive"
    report = f_residual(zeros, X, cfg["T"], cfg["a"], cfg["b"], primary)
    extra = {}
    if method == "both":
        naive = report.computed
        integral = compute_F(zeros, X, cfg["T"], "integral")
        extra = {"F_naive": naive, "F_integral": integral,
                 "relative_gap": abs(naive - integral) / max(abs(naive), 1e-300)}
    return _emit_reports(dict(cfg, method=method), [report], extra), EXIT_OK


def cmd_models(cfg):
    hyp = _hypothesis(cfg)
    X = cfg["X"]
    data = {"c": hyp.c, "c_prime": hyp.c_prime, "c_roundtrip": c_from_c_prime(hyp.c_prime)}
    if cfg["h"] is not None:
        h = cfg["h"]
        data["j_main_term"] = j_main_term(X, h, hyp.c_prime)
        data["E_rh"] = envelope_E(X, h, "rh")
        data["E_tilde_rh"] = envelope_E_tilde(X, h, "rh")
        data["R_ab"] = envelope_R_ab(X, h, hyp.a, hyp.b)
        rng = admissible_ranges(hyp, X, h, "xi_for_h")
        data.update(xi_lo=rng.lo, xi_hi=rng.hi, h_advisory_ok=rng.advisory_ok)
    if cfg["xi"] is not None:
        xi = cfg["xi"]
        data["r_main_term"] = r_main_term(X, xi, hyp.c)
        rng = admissible_ranges(hyp, X, xi, "h_for_xi")
        data.update(h_lo=rng.lo, h_hi=rng.hi)
    return _emit_mapping(cfg, data), EXIT_OK


def cmd_verify(cfg):
    from .verify import format_report, run_suite

    checks = run_suite(cfg["X"], cache_dir=cfg["cache_dir"], threads=cfg["threads"])
    text = format_report(checks, _echo(cfg))
    status = EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
    return text, status


def cmd_scan(cfg):
    """J (or R with --method R) against its main term over lists of X and h."""
    from .expsum import build_grid
    from .models import variance_asymptotic_report, mean_square_asymptotic_report

    method = cfg["method"] or "J"
    hyp = _hypothesis(cfg)
    reports = []
    Xs = cfg["X"]
    if method == "J":
        hs = cfg["h"] or [None]
        limit = max(X + math.ceil(h if h else X**0.3) + 1 for X in Xs for h in hs)
        table = _table(cfg, limit)
        for X in Xs:
            for h in hs:
                hh = h if h is not None else X**0.3
                reports.append(variance_asymptotic_report(table, None, X, hh, hyp))
    elif method == "R":
        table = _table(cfg, max(Xs))
        for X in Xs:
            xi = cfg["xi"] if cfg["xi"] is not None else X ** -0.4
            reports.append(mean_square_asymptotic_report(build_grid(table, X=X), X, xi, hyp))
    else:
        raise UsageError(f"unknown scan method {method!r}")
    out = dict(cfg, method=method, format="csv",
               X=",".join(str(x) for x in Xs),
               h=None if cfg["h"] is None else ",".join(f"{h:g}" for h in cfg["h"]))
    return _emit_reports(out, reports), EXIT_OK


HANDLERS = {
    "sieve-cache": cmd_sieve_cache,
    "expsum": cmd_expsum,
    "variance": cmd_variance,
    "paircorr": cmd_paircorr,
    "models": cmd_models,
    "verify": cmd_verify,
    "scan": cmd_scan,
}


def run(cfg: dict) -> tuple[str, int]:
    return HANDLERS[cfg["command"]](cfg)


def main(argv=None) -> int:
    import warnings

    warnings.simplefilter("ignore")
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        text, status = run(cfg)
        if cfg["out"]:
            Path(cfg["out"]).write_text(text)
        else:
            sys.stdout.write(text)
        return status
    except (FormatError, ZeroFileError, OSError) as exc:
        print(f"psilab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"psilab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PsilabError, ValueError) as exc:
        print(f"psilab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
