"""Command-line entry point: ``ergodic-towers <subcommand> [options]``.

Every report lists its configuration, its exact values (symbolic and as
12-digit decimals) and every audit boolean.  Exit status is 0 on success,
1 when an audit fails and 2 for a configuration error; failures still write
a report carrying the reason.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any

from gmpy2 import mpq

from .counterexample import (ConfigError, StabilityEngine, build_config, chain_check, choose_N0,
                             lower_halves, verify_half_average)
from .field import FieldMismatch, QuadNumber, parse_quad, parse_rational, to_decimal
from .intrinsic import GrowthError, check_growth, run_intrinsic
from .sets import IntervalSet
from .systems import (LeveledSet, OrbitCapExceeded, SkyscraperSystem, build_inflation, rotation,
                      system_from_spec)
from .towers import (AuditError, PieceCapExceeded, column_check, fatness_partial,
                     fatness_squared, inflation_tower, kakutani, partition_check, rokhlin,
                     tower_check, tower_to_json)

EXIT_OK, EXIT_AUDIT, EXIT_CONFIG = 0, 1, 2


class ConfigProblem(ValueError):
    pass


def _render(v) -> Any:
    if isinstance(v, QuadNumber):
        return str(v)
    if isinstance(v, type(mpq(0))):
        return str(QuadNumber(v))
    return v


def _decimal(v) -> str:
    if isinstance(v, bool):
        return ""
    if isinstance(v, QuadNumber):
        return to_decimal(v)
    if isinstance(v, type(mpq(0))):
        return to_decimal(QuadNumber(v))
    if isinstance(v, float):
        return f"{v:.12f}"
    return ""


@dataclass
class Report:
    command: str
    config: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    audits: dict = field(default_factory=dict)
    table: tuple | None = None  # (columns, rows)
    status: str = "ok"
    reason: str = ""
    pure_table: bool = False

    def audit(self, name: str, ok: bool) -> bool:
        self.audits[name] = bool(ok)
        return bool(ok)

    def exit_code(self) -> int:
        if self.status == "config_error":
            return EXIT_CONFIG
        if self.status == "audit_failure" or not all(self.audits.values()):
            return EXIT_AUDIT
        return EXIT_OK

    def finalize(self) -> None:
        if self.status == "ok" and not all(self.audits.values()):
            self.status = "audit_failure"
            failed = [k for k, v in self.audits.items() if not v]
            self.reason = "failed audits: " + ", ".join(failed)

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "status": self.status,
            "reason": self.reason,
            "config": {k: _render(v) for k, v in self.config.items()},
            "values": {k: {"exact": _render(v), "decimal": _decimal(v)} if _decimal(v)
                       else _render(v) for k, v in self.values.items()},
            "audits": self.audits,
        }
        if self.table is not None:
            cols, rows = self.table
            doc["table"] = {"columns": list(cols), "rows": [[_render(x) for x in r] for r in rows]}
        return json.dumps(doc, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.table is not None:
            cols, rows = self.table
            w.writerow(cols)
            for r in rows:
                w.writerow([_cell(x) for x in r])
            if self.pure_table and self.status == "ok":
                return buf.getvalue()
            buf.write("\n")
        w.writerow(["section", "key", "value", "decimal"])
        w.writerow(["status", "status", self.status, ""])
        if self.reason:
            w.writerow(["status", "reason", self.reason, ""])
        for k, v in self.config.items():
            w.writerow(["config", k, _render(v), ""])
        for k, v in self.values.items():
            w.writerow(["value", k, _cell(v), _decimal(v)])
        for k, v in self.audits.items():
            w.writerow(["audit", k, str(v).lower(), ""])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    return _render(v)


def _exact_cols(names):
    """Each exact column is followed by its 12-digit decimal rendering."""
    out = []
    for n in names:
        out.append(n)
        if n.startswith("="):
            out[-1] = n[1:]
            out.append(n[1:] + "_decimal")
    return out


def _exact_row(values):
    out = []
    for v in values:
        out.append(v)
        if isinstance(v, QuadNumber):
            out.append(to_decimal(v))
    return out


# parsing helpers -----------------------------------------------------------

def _rational(text: str, name: str) -> mpq:
    try:
        return parse_rational(text)
    except ValueError:
        raise ConfigProblem(f"--{name}: malformed rational {text!r}") from None


def _int_list(text: str, name: str) -> list:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigProblem(f"--{name}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigProblem(f"--{name}: empty list")
    return vals


def _system(text: str):
    try:
        return system_from_spec(text)
    except (ValueError, FieldMismatch) as exc:
        raise ConfigProblem(f"--system: {exc}") from None


def _interval(text: str, name: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigProblem(f"--{name}: expected 'l,r', got {text!r}")
    try:
        l, r = parse_quad(parts[0]), parse_quad(parts[1])
        return IntervalSet.interval(l, r)
    except (ValueError, FieldMismatch) as exc:
        raise ConfigProblem(f"--{name}: {exc}") from None


def _lift_base(sys, S: IntervalSet):
    """A flat interval set as a subset of level 0 of every cell."""
    if not isinstance(sys, SkyscraperSystem):
        return S
    comps = {}
    for idx, part in sys.split_by_cells(S).items():
        comps[(idx, 0)] = part
    return LeveledSet(sys, comps)


def _dump(t, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            json.dump(tower_to_json(t), fh, indent=2)
            fh.write("\n")


# subcommands ---------------------------------------------------------------

def cmd_kakutani(args, rep: Report) -> None:
    sys_ = _system(args.system)
    B = _lift_base(sys_, _interval(args.base, "base"))
    rep.config.update(system=args.system, base=args.base)
    if B.is_empty():
        raise ConfigProblem("--base: empty base set")
    t = kakutani(sys_, B)
    kac = QuadNumber(0)
    for c in t.columns:
        kac = kac + c.measure()
    rows = [_exact_row([c.height, c.base.measure(), c.measure()]) for c in t.columns]
    rep.table = (_exact_cols(["N", "=base_measure", "=column_measure"]), rows)
    rep.values["columns"] = len(t.columns)
    rep.values["kac_sum"] = kac
    try:
        fat = fatness_partial(t)
        rep.audit("fatness_forms_agree", True)
    except AuditError:
        fat = fatness_squared(t)
        rep.audit("fatness_forms_agree", False)
    rep.values["fatness_sum"] = fat
    rep.audit("kac_identity", kac == 1)
    rep.audit("partition", partition_check(t))
    rep.audit("columns", tower_check(sys_, t))
    _dump(t, args.dump_tower)


def cmd_rokhlin(args, rep: Report) -> None:
    sys_ = _system(args.system)
    eps = _rational(args.eps, "eps")
    rep.config.update(system=args.system, height=args.height, eps=eps)
    if args.height < 1 or not 0 < eps < 1:
        raise ConfigProblem("need height >= 1 and 0 < eps < 1")
    r = rokhlin(sys_, args.height, eps)
    rep.values["base_measure"] = r.column.base.measure()
    rep.values["column_measure"] = r.column.measure()
    rep.values["error_measure"] = r.error_set.measure()
    rep.audit("column", column_check(sys_, r.column))
    rep.audit("error_below_eps", r.error_set.measure() < eps)
    rep.audit("partition", (r.column.support() | r.error_set) == sys_.full_space())


def _inflation(args):
    try:
        alpha = parse_quad(args.alpha)
        return build_inflation(rotation(alpha), args.imax)
    except (ValueError, FieldMismatch) as exc:
        raise ConfigProblem(str(exc)) from None


def cmd_inflate(args, rep: Report) -> None:
    Y = _inflation(args)
    rep.config.update(imax=args.imax, alpha=args.alpha)
    t = inflation_tower(Y)
    rows, fat, ok_base = [], QuadNumber(0), True
    for c in t.columns:
        i = c.index
        mb = Y.cells[Y.cell_index(i)].base.measure()
        ok_base &= mb == mpq(3, 4**i)
        mu = c.measure()
        fat = fat + c.height * mu
        rows.append(_exact_row([i, c.height, mb, c.height * mb, mu]))
    rep.table = (_exact_cols(["i", "height", "=base_measure", "=column_measure_unnormalized",
                              "=column_mu"]), rows)
    total = Y.full_space().measure()
    rep.values["Z"] = Y.Z
    rep.values["total_mu"] = total
    rep.values["fatness_partial"] = fat
    rep.audit("base_measures", ok_base)
    rep.audit("total_mu_one", total == 1)
    rep.audit("Z_formula", Y.Z == 3 - mpq(3, 2**args.imax) + mpq(1, 4**args.imax))
    rep.audit("fatness_partial_formula", fat == len(t.columns) * 3 / Y.Z)
    rep.audit("columns", tower_check(Y, t))
    _dump(t, args.dump_tower)


def _horizons(args) -> list:
    hs = _int_list(args.horizons, "horizons") if args.horizons else [getattr(args, "horizon", 256)]
    if any(h < 1 for h in hs) or any(b <= a for a, b in zip(hs, hs[1:])):
        raise ConfigProblem("horizons must be positive and increasing")
    return hs


def cmd_counterexample(args, rep: Report) -> None:
    Y = _inflation(args)
    bound = _rational(args.bound, "bound")
    hs = _horizons(args)
    rep.config.update(imax=args.imax, alpha=args.alpha, horizons=",".join(map(str, hs)),
                      bound=bound, K="auto" if args.K is None else args.K)
    t = inflation_tower(Y)
    try:
        N0 = choose_N0(t, bound)
        cfg = build_config(t, N0)
    except ConfigError as exc:
        raise ConfigProblem(str(exc)) from None
    halves = lower_halves(t, N0)
    rep.values["N0"] = N0
    rep.values["measure_A"] = cfg.f_integral
    rep.values["threshold"] = cfg.threshold
    rep.audit("measure_A_below_quarter", cfg.f_integral < mpq(1, 4))
    rep.audit("average_at_least_half_on_lower_halves", verify_half_average(Y, cfg, halves))
    engine = StabilityEngine(Y, cfg.A, cfg.threshold)
    rows, integrals = [], []
    for H in hs:
        sp = engine.partition(H)
        K = args.K
        if K is None:
            fits = [c.index for c in t.columns if 2 * c.height <= H]
            K = max(fits) if fits else None
        integral = sp.integral()
        integrals.append(integral)
        rep.audit(f"partition_total_one_H{H}", sp.total_measure() == 1)
        if K is not None and K >= N0:
            ch = chain_check(cfg, halves, sp, K)
            rows.append(_exact_row([H, K, ch.lhs, ch.middle, ch.rhs, integral]) + [ch.ok])
            rep.audit(f"chain_H{H}", ch.ok)
        else:
            rows.append([H, "", "", "", "", "", "", "", integral, to_decimal(integral), ""])
    rep.table = (_exact_cols(["H", "K", "=lhs", "=middle", "=rhs", "=integral_lower_bound"])
                 + ["chain_ok"], rows)
    if len(hs) > 1:
        rep.audit("integral_increasing", all(b > a for a, b in zip(integrals, integrals[1:])))
    if args.figure:
        from .figures import integral_curve
        integral_curve(hs, [float(v) for v in integrals], args.figure,
                       title=f"inflation i_max={args.imax}, N0={N0}")


def cmd_intrinsic(args, rep: Report) -> None:
    sys_ = _system(args.system)
    ks = _int_list(args.ks, "ks")
    eps = _rational(args.eps, "eps")
    budget = _rational(args.budget, "budget")
    stages = len(ks) if args.stages is None else args.stages
    rep.config.update(system=args.system, ks=",".join(map(str, ks)), stages=stages,
                      eps=eps, budget=budget)
    try:
        grows = check_growth(ks, budget)
    except GrowthError as exc:
        raise ConfigProblem(str(exc)) from None
    if not grows:
        raise ConfigProblem(f"growth sequence {ks} violates the budget {budget}")
    try:
        t, d = run_intrinsic(sys_, ks, stages, eps, budget)
    except ValueError as exc:
        raise ConfigProblem(str(exc)) from None
    rep.audit("growth", True)
    for key in ("P1_partition", "P2_heights", "P3_columns", "P3_first_column", "nesting",
                "removal_bounds", "fatness_ok", "borel_cantelli_finite"):
        rep.audit(key, d[key])
    rep.values["first_column_measure"] = d["first_column_measure"]
    rep.values["first_column_floor"] = d["first_column_floor"]
    for j, m in d["column_measures"].items():
        rep.values[f"column_{j}_measure"] = m
    rep.values["fatness_partial"] = d["fatness_partial"]
    rep.values["fatness_floor"] = d["fatness_floor"]
    if d["measured_c"] is not None:
        rep.values["measured_c"] = d["measured_c"]
    rep.values["borel_cantelli_bound"] = d["borel_cantelli_bound"]
    rows = []
    for rec in d["surgery"]:
        for j, v in rec["columns"].items():
            rows.append(_exact_row([rec["stage"], j, v["removed"], v["bound"],
                                    v["entry_first_entrance"], v["entry_literal_union"]]))
    rep.table = (_exact_cols(["stage", "column", "=removed", "=removed_bound",
                              "=entry_first_entrance", "=entry_literal_union"]), rows)
    _dump(t, args.dump_tower)


def cmd_estimate(args, rep: Report) -> None:
    from .estimator import mean_curve
    sys_ = _system(args.system)
    hs = _horizons(args)
    if args.samples < 1:
        raise ConfigProblem("--samples must be at least 1")
    rep.config.update(system=args.system, horizons=",".join(map(str, hs)),
                      samples=args.samples, seed=args.seed)
    if args.set is not None:
        A = _lift_base(sys_, _interval(args.set, "set"))
        if isinstance(sys_, SkyscraperSystem):
            A = LeveledSet(sys_, {(c, l): part for (c, _), part in A.comps.items()
                                  for l in range(sys_.cells[c].height)})
    elif isinstance(sys_, SkyscraperSystem):
        t = inflation_tower(sys_)
        try:
            A = build_config(t, choose_N0(t, _rational(args.bound, "bound"))).A
        except ConfigError as exc:
            raise ConfigProblem(str(exc)) from None
    else:
        raise ConfigProblem("--set is required for a flat system")
    rows = mean_curve(sys_, A, hs, args.samples, args.seed)
    rep.table = (["H", "samples", "mean", "stderr", "seed"],
                 [[r.H, r.samples, f"{r.mean:.12f}", f"{r.stderr:.12f}", r.seed] for r in rows])
    rep.pure_table = True
    exact = None
    if args.exact:
        engine = StabilityEngine(sys_, A, 2 * A.measure())
        exact = {}
        for r in rows:
            v = engine.partition(r.H).integral()
            exact[r.H] = float(v)
            rep.values[f"exact_integral_H{r.H}"] = v
            rep.audit(f"within_3_stderr_H{r.H}", abs(r.mean - float(v)) <= 3 * r.stderr)
        rep.pure_table = False
    if args.figure:
        from .figures import estimate_curve
        estimate_curve(rows, args.figure, exact)


COMMANDS = {
    "kakutani": cmd_kakutani,
    "rokhlin": cmd_rokhlin,
    "inflate": cmd_inflate,
    "counterexample": cmd_counterexample,
    "intrinsic": cmd_intrinsic,
    "estimate": cmd_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergodic-towers", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="csv"):
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--out", help="write the report here instead of stdout")

    k = sub.add_parser("kakutani", help="first-return tower over a base interval")
    k.add_argument("--system", default="rotation:alpha=golden")
    k.add_argument("--base", default="0,golden", help="base interval 'l,r'")
    k.add_argument("--dump-tower", metavar="PATH")
    common(k)

    r = sub.add_parser("rokhlin", help="Rokhlin column of given height and error")
    r.add_argument("--system", default="rotation:alpha=golden")
    r.add_argument("--height", type=int, default=16)
    r.add_argument("--eps", default="1/10")
    common(r)

    for name, hlp in (("inflate", "build the inflated skyscraper and its tower"),
                      ("counterexample", "exact integrals of the truncated stability time")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--imax", type=int, default=10)
        s.add_argument("--alpha", default="golden", help="rotation angle of the base")
        if name == "inflate":
            s.add_argument("--dump-tower", metavar="PATH")
        else:
            s.add_argument("--horizon", type=int, default=512)
            s.add_argument("--horizons", help="comma-separated, overrides --horizon")
            s.add_argument("--K", type=int, default=None,
                           help="last column index in the chain check (default: auto)")
            s.add_argument("--bound", default="1/4")
            s.add_argument("--figure", metavar="PNG")
        common(s)

    i = sub.add_parser("intrinsic", help="staged fat-tower construction with audits")
    i.add_argument("--system", default="rotation:alpha=golden")
    i.add_argument("--ks", default="1,16,256")
    i.add_argument("--stages", type=int, default=None)
    i.add_argument("--eps", default="1/10")
    i.add_argument("--budget", default="1/8")
    i.add_argument("--dump-tower", metavar="PATH")
    common(i, fmt="json")

    e = sub.add_parser("estimate", help="Monte-Carlo mean of the truncated stability time")
    e.add_argument("--system", default="inflation:imax=10")
    e.add_argument("--set", help="target interval 'l,r' (required on flat systems)")
    e.add_argument("--bound", default="1/4")
    e.add_argument("--horizons", default="16,32,64,128,256,512,1024")
    e.add_argument("--samples", type=int, default=10000)
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--exact", action="store_true", help="also compute exact integrals")
    e.add_argument("--figure", metavar="PNG")
    common(e)
    return p


def run(args) -> int:
    rep = Report(args.command)
    try:
        COMMANDS[args.command](args, rep)
        rep.finalize()
    except (ConfigProblem, ConfigError) as exc:
        rep.status, rep.reason = "config_error", str(exc)
    except (AuditError, PieceCapExceeded, OrbitCapExceeded) as exc:
        rep.status, rep.reason = "audit_failure", f"{type(exc).__name__}: {exc}"
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if rep.status != "ok":
        print(f"{args.command}: {rep.reason}", file=sys.stderr)
    return rep.exit_code()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
