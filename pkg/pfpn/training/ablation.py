from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from ..config import NUM_WORKERS
from ..data.synthetic import generate_synthetic
from ..data.types import Sample
from ..evaluation.metrics import MetricsReport
from ..evaluation.report import evaluate_model, write_report
from ..model.checkpoint import load_model
from ..schemas import AblationReportFile, AblationRowFile, DataConfig, TrainConfig, with_updates
from .trainer import load_training_samples, train

logger = logging.getLogger(__name__)

# the held-out split is the training generator moved to a distant seed
HELD_OUT_SEED_OFFSET = 10_000

ABLATION_JSON = "ablation.json"
ABLATION_TABLE = "ablation.txt"
REPORT_NAME = "report.json"


@dataclass(frozen=True)
class AblationSetting:
    num_fpms: int
    share_fpm_weights: bool = False

    @property
    def label(self) -> str:
        return f"{self.num_fpms} FPM" + (" shared" if self.share_fpm_weights else "")

    @property
    def slug(self) -> str:
        return f"t{self.num_fpms}" + ("_shared" if self.share_fpm_weights else "")


@dataclass(frozen=True)
class AblationRow:
    setting: AblationSetting
    report: MetricsReport
    checkpoint: Path


def ablation_settings(t_values: Iterable[int], shared_options: Iterable[bool]) -> List[AblationSetting]:
    """
    One setting per T, ordered by T; for T >= 2 one per sharing option,
    separate weights first. Sharing means nothing below two stages, so
    T = 0 and T = 1 appear once.
    """
    options = sorted(set(shared_options))
    out: List[AblationSetting] = []
    for t in sorted(set(t_values)):
        if t < 2:
            out.append(AblationSetting(t, False))
        else:
            out.extend(AblationSetting(t, s) for s in options)
    return out


def held_out_samples(data: DataConfig) -> List[Sample]:
    spec = with_updates(
        data.synthetic,
        num_samples=data.test_samples,
        seed=data.synthetic.seed + HELD_OUT_SEED_OFFSET,
    )
    return generate_synthetic(spec)


def setting_config(base: TrainConfig, setting: AblationSetting) -> TrainConfig:
    model = with_updates(base.model, num_fpms=setting.num_fpms, share_fpm_weights=setting.share_fpm_weights)
    return with_updates(base, model=model)


def run_ablation(
    base: TrainConfig,
    t_values: Sequence[int],
    shared_options: Sequence[bool] = (False, True),
    output_dir: Path | str = Path("runs/ablation"),
    *,
    test_samples: Optional[Sequence[Sample]] = None,
    workers: int = NUM_WORKERS,
) -> List[AblationRow]:
    """
    Train one model per setting on identical data and seed, then score each on
    the held-out split. Writes ablation.json and ablation.txt into output_dir.
    """
    settings = ablation_settings(t_values, shared_options)
    if not settings:
        raise ValueError("t_values must not be empty")
    output_dir = Path(output_dir)

    train_samples = load_training_samples(base, workers)
    if test_samples is None:
        test_samples = held_out_samples(base.data)

    rows: List[AblationRow] = []
    for setting in settings:
        logger.info("ablation setting %s", setting.label)
        run_dir = output_dir / setting.slug
        result = train(setting_config(base, setting), run_dir, samples=train_samples, workers=workers)
        model, _ = load_model(result.checkpoint)
        report = evaluate_model(model, test_samples, label=setting.label, workers=workers)
        write_report(report, run_dir / REPORT_NAME)
        rows.append(AblationRow(setting, report, result.checkpoint))

    write_ablation_report(rows, output_dir)
    return rows


# -----------------------------
# Output
# -----------------------------

def to_file(rows: Sequence[AblationRow]) -> AblationReportFile:
    return AblationReportFile(rows=[
        AblationRowFile(
            label=r.setting.label,
            num_fpms=r.setting.num_fpms,
            share_fpm_weights=r.setting.share_fpm_weights,
            mae=r.report.mae,
            max_f=r.report.max_f,
            mean_f=r.report.mean_f,
            s_measure=r.report.s_measure,
            checkpoint=str(r.checkpoint),
        )
        for r in rows
    ])


def format_table(rows: Sequence[AblationRow]) -> str:
    header: Tuple[str, ...] = ("setting", "MAE", "max F", "mean F", "S")
    body = [
        (r.setting.label, f"{r.report.mae:.4f}", f"{r.report.max_f:.4f}",
         f"{r.report.mean_f:.4f}", f"{r.report.s_measure:.4f}")
        for r in rows
    ]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]

    def fmt(line) -> str:
        first = line[0].ljust(widths[0])
        rest = (cell.rjust(w) for cell, w in zip(line[1:], widths[1:]))
        return "  ".join([first, *rest])

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(header), rule, *(fmt(line) for line in body)]) + "\n"


def write_ablation_report(rows: Sequence[AblationRow], output_dir: Path | str) -> Tuple[Path, Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    json_path = output_dir / ABLATION_JSON
    table_path = output_dir / ABLATION_TABLE
    json_path.write_text(to_file(rows).model_dump_json(indent=2) + "\n", encoding="utf-8")
    table_path.write_text(format_table(rows), encoding="utf-8")
    return json_path, table_path
