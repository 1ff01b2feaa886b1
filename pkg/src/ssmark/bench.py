"""Desk-scale reproductions of the evaluation experiments.

Three runs: a PSNR table over the corpus, the derived-seed false-positive
matrix, and the robustness matrix over the attack grid.  Reports are
tab-separated, deterministic, and independent of the worker count.
"""

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import attacks, detect, mark, raster, registry
from .errors import EmptyCorpus
from .keystream import derive_seed_vector, mix_outputs

PSNR_GATE_DB = 40.0
FP_GATE = 0.01
KIND_GATES = {
    "jpeg": 0.90,
    "scale": 0.95,
    "rowcol": 0.95,
    "rotate_crop": 0.85,
}
OVERALL_GATE = 0.85

DEFAULT_FP_KEYS = (50, 100, 200, 350, 700)

# popcount-7 message: worst case, all 8 sequences cast
FP_MESSAGE = 0x007F

CORPUS_EXTS = (".pgm", ".ppm", ".png")


def load_corpus(directory):
    """Sorted (name, image) pairs from a corpus directory."""
    if not os.path.isdir(directory):
        raise EmptyCorpus(f"no corpus directory {directory}")
    names = sorted(
        n for n in os.listdir(directory)
        if os.path.splitext(n)[1].lower() in CORPUS_EXTS
    )
    if not names:
        raise EmptyCorpus(f"no corpus images in {directory}")
    return [(n, raster.load_image(os.path.join(directory, n))) for n in names]


def default_message(image_index, key):
    """Deterministic per-(image, key) payload for benchmark runs."""
    return int(mix_outputs(key * 131 + image_index, 1)[0]) % (mark.MESSAGE_MAX + 1)


def default_attack_grid():
    g = []
    for q in (90, 70, 50, 30):
        g.append(attacks.make_spec("jpeg", q))
    for f in (0.5, 0.75, 1.5, 2.0):
        g.append(attacks.make_spec("scale", f, f))
    for f in (0.9, 0.75, 0.5):
        g.append(attacks.make_spec("crop", f))
    for t in (-10.0, -5.0, -2.0, -0.5, 0.5, 2.0, 5.0, 10.0):
        g.append(attacks.make_spec("rotate_crop", t))
    g.append(attacks.make_spec("rotate_crop_scale", 5.0, 0.75))
    g.append(attacks.make_spec("shear", 1.0, 1.0))
    g.append(attacks.make_spec("shear", 5.0, 5.0))
    g.append(attacks.make_spec("linear", 1.01, 0.013, 0.009, 1.011))
    g.append(attacks.make_spec("aspect", 0.8, 1.0))
    g.append(attacks.make_spec("aspect", 1.0, 1.1))
    for r, c in ((1, 1), (5, 5), (17, 5)):
        g.append(attacks.make_spec("rowcol", r, c))
    g.append(attacks.make_spec("median", 3))
    g.append(attacks.make_spec("blur", 0.8))
    g.append(attacks.make_spec("geom_distort", 1.0, 1))
    return g


# ---------------------------------------------------------------------------
# PSNR table
# ---------------------------------------------------------------------------

@dataclass
class PsnrReport:
    rows: list  # (image name, psnr dB)
    gate_db: float = PSNR_GATE_DB

    @property
    def passed(self):
        return all(p >= self.gate_db for _, p in self.rows)

    def to_tsv(self):
        lines = ["image\tpsnr_db\tpass"]
        for name, p in self.rows:
            val = "inf" if math.isinf(p) else f"{p:.4f}"
            lines.append(f"{name}\t{val}\t{int(p >= self.gate_db)}")
        lines.append(f"# gate_db={self.gate_db}\tpassed={int(self.passed)}")
        return "\n".join(lines) + "\n"


def run_psnr_table(corpus, keys=None, messages=None, params=None):
    if not corpus:
        raise EmptyCorpus("empty corpus")
    keys = list(keys) if keys else [DEFAULT_FP_KEYS[0]]
    rows = []
    for i, (name, img) in enumerate(corpus):
        key = keys[i % len(keys)]
        message = (messages[i % len(messages)] if messages
                   else default_message(i, key))
        p = params or mark.default_params(img.width, img.height)
        marked, _ = mark.embed(img, key, message, p)
        rows.append((name, raster.psnr(img, marked)))
    return PsnrReport(rows=rows)


# ---------------------------------------------------------------------------
# false-positive matrix
# ---------------------------------------------------------------------------

@dataclass
class FpReport:
    keys: tuple
    trials: int
    fp_count: int
    controls: int
    control_positives: int

    @property
    def fp_rate(self):
        return self.fp_count / self.trials if self.trials else 0.0

    @property
    def passed(self):
        return (self.fp_rate <= FP_GATE
                and self.control_positives == self.controls)

    def to_tsv(self):
        lines = [
            "keys\t" + ",".join(str(k) for k in self.keys),
            f"trials\t{self.trials}",
            f"fp_count\t{self.fp_count}",
            f"fp_rate\t{self.fp_rate:.6f}",
            f"controls\t{self.controls}",
            f"control_positives\t{self.control_positives}",
            f"# gate={FP_GATE}\tpassed={int(self.passed)}",
        ]
        return "\n".join(lines) + "\n"


def run_fp_experiment(corpus, keys=DEFAULT_FP_KEYS, message=FP_MESSAGE):
    """Detect with each key's 15 derived seeds; count existence positives."""
    if not corpus:
        raise EmptyCorpus("empty corpus")
    keys = tuple(keys)
    if not keys:
        raise ValueError("at least one key required")
    trials = fp = controls = control_pos = 0
    for _, img in corpus:
        params = mark.default_params(img.width, img.height)
        for key in keys:
            marked, _ = mark.embed(img, key, message, params)
            controls += 1
            if detect.detect(marked, key, params).watermarked:
                control_pos += 1
            for trial_key in derive_seed_vector(key).seeds[1:]:
                trials += 1
                if detect.detect(marked, trial_key, params).watermarked:
                    fp += 1
    return FpReport(keys=keys, trials=trials, fp_count=fp,
                    controls=controls, control_positives=control_pos)


# ---------------------------------------------------------------------------
# robustness matrix
# ---------------------------------------------------------------------------

@dataclass
class RobustnessReport:
    cells: list  # (kind, spec string, image, key, survived)
    kind_averages: dict = field(default_factory=dict)
    overall: float = 0.0
    with_registration: bool = True

    @property
    def passed(self):
        for kind, gate in KIND_GATES.items():
            if kind in self.kind_averages and self.kind_averages[kind] < gate:
                return False
        return self.overall >= OVERALL_GATE

    def to_tsv(self):
        lines = [f"# with_registration={int(self.with_registration)}",
                 "kind\tattack\timage\tkey\tsurvived"]
        for kind, spec, image, key, survived in self.cells:
            lines.append(f"{kind}\t{spec}\t{image}\t{key}\t{int(survived)}")
        for kind in sorted(self.kind_averages):
            lines.append(f"KIND\t{kind}\t{self.kind_averages[kind]:.6f}")
        lines.append(f"OVERALL\t{self.overall:.6f}")
        lines.append(f"# passed={int(self.passed)}")
        return "\n".join(lines) + "\n"


def run_robustness_matrix(corpus, keys=None, grid=None, params=None,
                          with_registration=True, jobs=1, store_root=None):
    """Embed, attack, detect over the full (image, key, attack) product.

    Identity control cells are always run; any control failure aborts the run.
    """
    if not corpus:
        raise EmptyCorpus("empty corpus")
    keys = list(keys) if keys else [DEFAULT_FP_KEYS[0]]
    grid = list(grid) if grid is not None else default_attack_grid()
    if not grid:
        raise ValueError("empty attack grid")

    tmp = None
    store = None
    if with_registration:
        if store_root is None:
            tmp = tempfile.TemporaryDirectory(prefix="ssmark-bench-")
            store_root = tmp.name
        store = registry.Store(store_root, create=True)

    # embed once per (image, key)
    embedded = {}
    for i, (name, img) in enumerate(corpus):
        for key in keys:
            msg = default_message(i, key)
            p = params or mark.default_params(img.width, img.height)
            marked, receipt = mark.embed(img, key, msg, p)
            embedded[(name, key)] = (img, marked, msg, receipt)
            if store is not None:
                store.ingest(img, receipt.supplementary, fingerprint=msg)

    tasks = []
    for name, _ in corpus:
        for key in keys:
            tasks.append((name, key, None))  # identity control
            for spec in grid:
                tasks.append((name, key, spec))

    def run_cell(task):
        name, key, spec = task
        _, marked, msg, receipt = embedded[(name, key)]
        suspect = marked if spec is None else attacks.apply_attack(marked, spec)
        if with_registration:
            result = detect.detect_with_registration(
                suspect, key, store, params=receipt.params
            )
        else:
            result = detect.detect_plain(suspect, key, receipt.params)
        survived = bool(result.watermarked and result.message == msg)
        kind = "identity" if spec is None else spec.kind
        label = "identity" if spec is None else str(spec)
        return (kind, label, name, key, survived)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(run_cell, tasks))
    else:
        cells = [run_cell(t) for t in tasks]
    cells.sort()

    if tmp is not None:
        tmp.cleanup()

    controls = [c for c in cells if c[0] == "identity"]
    if any(not c[4] for c in controls):
        raise RuntimeError("identity control row not 100%: self-test failed")

    per_kind = {}
    for kind, _, _, _, survived in cells:
        if kind == "identity":
            continue
        per_kind.setdefault(kind, []).append(survived)
    kind_averages = {k: sum(v) / len(v) for k, v in per_kind.items()}
    overall = (sum(kind_averages.values()) / len(kind_averages)
               if kind_averages else 1.0)
    return RobustnessReport(cells=cells, kind_averages=kind_averages,
                            overall=overall, with_registration=with_registration)
