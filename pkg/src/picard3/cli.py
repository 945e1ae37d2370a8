"""Command line driver: picard3 <stage> [options].

Each stage writes JSON under <cache-dir>/<stage>/<key>.json and reuses what
earlier stages left there. Rationals are written as "num/den" strings.
Exit codes: 0 success, 1 mismatch with the reference tables, 2 bad
configuration, 3 failure of the bound computation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import forms_engine as fe
from . import picard_curves as pc
from .nf_core import LABELS
from .sunit_solver import SUnitError, SUnitSolution, solve_all

log = logging.getLogger("picard3")

STAGES = ("sunits", "forms4", "forms5", "pairs", "curves", "verify", "all")
EXIT_OK, EXIT_DIFF, EXIT_CONFIG, EXIT_BOUND = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    stage: str
    fields: list[str] = field(default_factory=lambda: list(LABELS))
    systems: list[str] = field(default_factory=lambda: list(fe.SYSTEMS))
    cache_dir: Path = Path("cache")
    precision_bits: int = 256
    jobs: int = 1
    golden: Path | None = None
    refresh: bool = False

    def validate(self):
        if self.stage not in STAGES:
            raise ConfigError(f"unknown stage {self.stage}")
        for f in self.fields:
            if f not in LABELS:
                raise ConfigError(f"unknown field {f}")
        try:
            self.systems = [fe.get_system(s).name for s in self.systems]
        except fe.FormError as exc:
            raise ConfigError(str(exc)) from exc
        if self.precision_bits < 64:
            raise ConfigError("precision below 64 bits is not supported")
        if self.jobs < 1:
            raise ConfigError("--jobs must be positive")
        if self.golden is not None and not Path(self.golden).exists():
            raise ConfigError(f"golden table {self.golden} not found")


def _path(cfg: RunConfig, stage: str, key: str) -> Path:
    return Path(cfg.cache_dir) / stage / f"{key.replace(',', '_')}.json"


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest() if path.exists() else ""


def _write(path: Path, obj, inputs: str = "") -> None:
    """Store obj with the digest of the stage inputs and of obj itself."""
    path.parent.mkdir(parents=True, exist_ok=True)
    rec = dict(obj, inputs=inputs, digest=_digest(obj))
    text = json.dumps(rec, indent=1, sort_keys=True) + "\n"
    if path.exists() and path.read_text() == text:
        return
    path.write_text(text)


def _read(cfg: RunConfig, stage: str, key: str, inputs: str = ""):
    """Cached stage output, or None when missing, stale or corrupted."""
    p = _path(cfg, stage, key)
    if cfg.refresh or not p.exists():
        return None
    try:
        rec = json.loads(p.read_text())
        body = {k: v for k, v in rec.items() if k not in ("inputs", "digest")}
        ok = rec.get("inputs") == inputs and rec.get("digest") == _digest(body)
    except (ValueError, AttributeError):
        ok = False
    if not ok:
        log.warning("cache %s is stale or corrupted; recomputing", p)
        return None
    return body


# bump when the layout or meaning of a stage file changes
CACHE_FORMAT = 2


def _inputs(*paths: Path, extra: str = "") -> str:
    h = hashlib.sha256(f"v{CACHE_FORMAT}:{extra}".encode())
    for p in paths:
        h.update(_file_digest(p).encode())
    return h.hexdigest()


# ------------------------------------------------------------------ stages

def _solve_one(args):
    label, cache, refresh = args
    return solve_all(label, cache_dir=cache, refresh=refresh)


def stage_sunits(cfg: RunConfig, labels=None) -> dict[str, list[SUnitSolution]]:
    labels = labels or cfg.fields
    cache = Path(cfg.cache_dir) / "sunits"
    jobs = [(l, cache, cfg.refresh) for l in labels]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_solve_one, jobs))
    else:
        results = [_solve_one(j) for j in jobs]
    out = {}
    for res in results:
        out[res.field] = res.solutions
        print(f"sunits {res.field}: {len(res.solutions)} solutions (search bound {res.search_bound})")
    return out


def _sols_for(cfg: RunConfig, fs: fe.FieldSystem):
    return stage_sunits(cfg, [fs.closure])[fs.closure] if fs.closure != "K0" else \
        stage_sunits(cfg, ["K0"])["K0"]


def _sunit_file(cfg: RunConfig, label: str) -> Path:
    return Path(cfg.cache_dir) / "sunits" / f"sunit_{label}.json"


def stage_forms4(cfg: RunConfig, name: str) -> fe.F4Result:
    fs = fe.SYSTEMS[name]
    if name == "K0,K0,K0,K0":
        inputs = _inputs(extra=f"{name}:{cfg.precision_bits}")
    else:
        sols = _sols_for(cfg, fs)
        inputs = _inputs(_sunit_file(cfg, fs.closure), extra=f"{name}:{cfg.precision_bits}")
    cached = _read(cfg, "forms4", name, inputs)
    if cached is not None:
        recs = [fe.FormRecord(fe.BinaryForm.from_json(r["form"]), (), r["provenance"])
                for r in cached["forms"]]
        stats = fe.DeltaSearchStats(**cached["stats"])
        return fe.F4Result(fs, recs, stats, cached["raw_count"])
    t = time.time()
    if name == "K0,K0,K0,K0":
        res = fe.F4Result(fs, [], fe.DeltaSearchStats(), 0)  # empty solution set over Q
    else:
        res = fe.build_F4(fs, sols)
    _write(_path(cfg, "forms4", name), {
        "system": name, "raw_count": res.raw_count, "stats": vars(res.stats),
        "forms": [{"form": r.form.to_json(), "provenance": r.provenance} for r in res.forms]},
        inputs)
    print(f"forms4 {name}: {len(res.forms)} classes from {res.raw_count} forms "
          f"({time.time() - t:.1f}s)")
    return res


def _with_roots(rec: fe.FormRecord, closure: str) -> fe.FormRecord:
    if rec.vectors:
        return rec
    vecs = tuple(fe._vector_of_point(p) for p in fe.form_roots(rec.form, closure))
    return fe.FormRecord(rec.form, vecs, rec.provenance)


def stage_forms5(cfg: RunConfig, name: str) -> list[fe.BinaryForm]:
    fs = fe.SYSTEMS[name]
    f4 = stage_forms4(cfg, name)
    inputs = _inputs(_path(cfg, "forms4", name), _sunit_file(cfg, fs.closure))
    cached = _read(cfg, "forms5", name, inputs)
    if cached is not None:
        return [fe.BinaryForm.from_json(f) for f in cached["forms"]]
    out = []
    if f4.forms:
        taus = fe.tau_values(fs, _sols_for(cfg, fs))
        seen = set()
        for rec in f4.forms:
            rec = _with_roots(rec, fs.closure)
            for q in fe.extend_to_quintic(rec.form, fs, taus, rec.roots()):
                if q.form.primitive() not in seen:
                    seen.add(q.form.primitive())
                    out.append(q.form)
    _write(_path(cfg, "forms5", name), {"system": name, "forms": [f.to_json() for f in out]}, inputs)
    print(f"forms5 {name}: {len(out)} quintics")
    return out


def stage_pairs(cfg: RunConfig, name: str) -> list[fe.BinaryForm]:
    quintics = stage_forms5(cfg, name)
    inputs = _inputs(_path(cfg, "forms5", name))
    cached = _read(cfg, "pairs", name, inputs)
    if cached is not None:
        return [fe.BinaryForm.from_json(f) for f in cached["classes"]]
    pairs = []
    for G in quintics:
        pairs.extend(fe.to_quintic_linear_pairs(G))
    classes = fe.os0_classes_from_pairs(pairs)
    _write(_path(cfg, "pairs", name), {
        "system": name,
        "pairs": [{"quintic": p.quintic.to_json(), "linear": p.linear.to_json()} for p in pairs],
        "classes": [c.to_json() for c in classes]}, inputs)
    print(f"pairs {name}: {len(pairs)} pairs, {len(classes)} O_S^0 classes")
    return classes


def _curves_key(cfg: RunConfig) -> str:
    if sorted(cfg.systems) == sorted(fe.SYSTEMS):
        return "all"
    return "+".join(sorted(cfg.systems))


def stage_curves(cfg: RunConfig) -> list[pc.TwistBlock]:
    classes = {name: stage_pairs(cfg, name) for name in cfg.systems}
    inputs = _inputs(*(_path(cfg, "pairs", name) for name in cfg.systems))
    cached = _read(cfg, "curves", _curves_key(cfg), inputs)
    if cached is not None:
        blocks = []
        for b in cached["blocks"]:
            blk = pc.TwistBlock(fe.SYSTEMS[b["system"]], fe.BinaryForm.from_json(b["quartic"]))
            for c in b["curves"]:
                blk.curves.append(pc.PicardCurve(fe.BinaryForm.from_json(c["quartic"]), c["twist"],
                                                 tuple(c["model"])))
            blocks.append(blk)
        return blocks
    blocks = []
    for name in cfg.systems:
        for F in classes[name]:
            blocks.append(pc.twist_block(fe.SYSTEMS[name], F))
    _write(_path(cfg, "curves", _curves_key(cfg)), {"blocks": [b.to_json() for b in blocks]}, inputs)
    n = sum(len(b.curves) for b in blocks)
    print(f"curves: {n} curves in {len(blocks)} twist blocks")
    for b in blocks:
        print(f"  {b.system}: " + "; ".join(str(c) for c in b.curves))
    return blocks


def stage_verify(cfg: RunConfig) -> int:
    blocks = stage_curves(cfg)
    golden = None
    if cfg.golden is not None:
        raw = json.loads(Path(cfg.golden).read_text())
        golden = {k: [[tuple(m) for m in blk] for blk in v] for k, v in raw.items()}
    rep = pc.match_golden(blocks, golden)
    # the family spreads over several systems, so it is checked on full runs only
    fam = pc.check_simple_family(blocks) if _curves_key(cfg) == "all" else {}
    print(f"verify: {rep.matched} table curves matched up to isomorphism, "
          f"{rep.exact_matches} with identical models")
    for s in rep.missing_from_golden:
        print(f"  computed but not in table: {s}")
    for s in rep.missing_from_computed:
        print(f"  in table but not computed: {s}")
    for s in rep.block_mismatches:
        print(f"  {s}")
    missing_fam = [s for s, ok in fam.items() if not ok]
    if missing_fam:
        print(f"  family x^4 + 3^s x missing for s = {missing_fam}")
    return EXIT_OK if rep.ok and not missing_fam else EXIT_DIFF


def run(cfg: RunConfig) -> int:
    cfg.validate()
    fe.PREC = cfg.precision_bits
    if cfg.stage == "sunits":
        stage_sunits(cfg)
        return EXIT_OK
    if cfg.stage in ("forms4", "forms5", "pairs"):
        fn = {"forms4": stage_forms4, "forms5": stage_forms5, "pairs": stage_pairs}[cfg.stage]
        for name in cfg.systems:
            fn(cfg, name)
        return EXIT_OK
    if cfg.stage == "curves":
        stage_curves(cfg)
        return EXIT_OK
    if cfg.stage == "all":
        stage_sunits(cfg)
        for name in cfg.systems:
            stage_pairs(cfg, name)
    return stage_verify(cfg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="picard3",
                                description="Picard curves over Q with good reduction away from 3")
    p.add_argument("stage", choices=STAGES)
    p.add_argument("--field", action="append", dest="fields", help="field label (repeatable)")
    p.add_argument("--system", action="append", dest="systems",
                   help="field system such as K0,K2 (repeatable)")
    p.add_argument("--cache-dir", type=Path, default=Path("cache"))
    p.add_argument("--precision-bits", type=int, default=256)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--golden", type=Path, default=None, help="alternative reference table")
    p.add_argument("--refresh", action="store_true", help="ignore cached results")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    cfg = RunConfig(args.stage, cache_dir=args.cache_dir, precision_bits=args.precision_bits,
                    jobs=args.jobs, golden=args.golden, refresh=args.refresh)
    if args.fields:
        cfg.fields = args.fields
    if args.systems:
        cfg.systems = args.systems
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SUnitError as exc:
        print(f"bound computation failed: {exc}", file=sys.stderr)
        return EXIT_BOUND


if __name__ == "__main__":
    sys.exit(main())
