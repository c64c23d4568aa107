"""Command-line entry point: ``diagledger run | verify | explain``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import DiagError, IngestError, DefinitionParseError
from .ledger import AuditLog, check_record, verify_audit_log
from .pipeline import PipelineConfig, _data_path, emit_reports, run_pipeline

EXIT_OK = 0
EXIT_AUDIT = 1
EXIT_INPUT = 2


def _add_run(sub):
    p = sub.add_parser("run", help="run the full pipeline and write reports")
    p.add_argument("--dataset", type=Path, default=_data_path("reference_dataset.tsv"))
    p.add_argument("--defs", type=Path, default=_data_path("reference_indicators.defs"))
    p.add_argument("--rules", type=Path, default=_data_path("reference_rules.yaml"))
    p.add_argument("--hypotheses", type=Path, default=_data_path("reference_hypotheses.yaml"))
    p.add_argument("--cfindex", type=Path, default=None, help="coordination-friction index config (YAML)")
    p.add_argument("--with-synthetic-cfindex", action="store_true", help="use the bundled synthetic sector series")
    p.add_argument("--out", type=Path, required=True)


def _add_verify(sub):
    p = sub.add_parser("verify", help="recompute every record of an audit log")
    p.add_argument("audit_log", type=Path)


def _add_explain(sub):
    p = sub.add_parser("explain", help="print the lineage of one indicator")
    p.add_argument("indicator_id")
    p.add_argument("--audit", type=Path, help="audit log (default: <out>/audit.log)")
    p.add_argument("--out", type=Path, default=Path("."))


def cmd_run(args) -> int:
    cfindex = args.cfindex
    if cfindex is None and args.with_synthetic_cfindex:
        cfindex = _data_path("synthetic_cfindex.yaml")
    config = PipelineConfig(
        dataset=args.dataset,
        defs=args.defs,
        rules=args.rules,
        hypotheses=args.hypotheses,
        out_dir=args.out,
        cfindex=cfindex,
    )
    bundle = run_pipeline(config)
    written = emit_reports(bundle, args.out)
    for path in written:
        print(f"wrote {path}")
    for v in bundle.rejected:
        print(f"rejected {v.candidate_id} (step {v.failed_step}): {v.reason}", file=sys.stderr)
    for rid, why in bundle.blocked:
        print(f"blocked {rid}: {why}", file=sys.stderr)
    for sector, rho in bundle.cf_validation.items():
        print(f"cfindex rank correlation with outcome, {sector}: {rho:.4f}")
    for a in bundle.assessments:
        print(f"{a.id}: {a.verdict.value}")
    rep = bundle.verification
    print(f"audit: {rep.passed}/{rep.total} records verified")
    if not bundle.ok:
        for rid, why in bundle.compute_errors:
            print(f"FAILED {rid}: {why}", file=sys.stderr)
        for rid in rep.failed:
            print(f"FAILED {rid}: recomputation does not match", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_verify(args) -> int:
    rep = verify_audit_log(AuditLog.load(args.audit_log))
    print(f"total {rep.total}  passed {rep.passed}  failed {len(rep.failed)}")
    for rid in rep.failed:
        print(f"FAILED {rid}")
    return EXIT_OK if rep.ok else EXIT_AUDIT


def cmd_explain(args) -> int:
    path = args.audit or args.out / "audit.log"
    log = AuditLog.load(path)
    recs = [r for r in log if r.result_id == args.indicator_id]
    if not recs:
        users = [r.result_id for r in log if any(i.id == args.indicator_id for i in r.inputs)]
        if users:
            print(f"{args.indicator_id} is a source value used by: {', '.join(users)}")
            return EXIT_OK
        print(f"no audit record for {args.indicator_id!r} in {path}", file=sys.stderr)
        return EXIT_INPUT
    for rec in recs:
        d = rec.to_dict()
        print(f"{rec.result_id}  [{rec.label}]")
        print(f"  formula   {rec.formula_id} (equation {d['equation']})")
        for i in rec.inputs:
            print(f"  input     {i.id} = {i.value!r} {i.unit}, {i.period}, {i.status}, {i.source}")
        if rec.params:
            print(f"  params    {rec.params}")
        print(f"  value     {rec.recomputed!r}")
        if rec.reported:
            print(f"  published {rec.reported}")
        print(f"  boundary  {rec.boundary.value}")
        if rec.supersedes:
            print(f"  supersedes {rec.supersedes}")
        print(f"  verified  {'yes' if check_record(rec) else 'NO'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="diagledger", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_verify(sub)
    _add_explain(sub)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": cmd_run, "verify": cmd_verify, "explain": cmd_explain}[args.command]
    try:
        return handler(args)
    except (IngestError, DefinitionParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DiagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
