"""Command-line entry points: dataset generation, training, generation,
comprehension, rank construction, metric evaluation, and the annotation
service."""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import checkpoint as ckpt
from .config import Config, ConfigError, default_config_yaml, load_config
from .data import DataError, gen_synthetic, load_dataset, save_dataset
from .evaluate import (
    generation_eval,
    ranking_pair_eval,
    reinforcer_comprehension,
    speaker_comprehension,
)
from .metrics import corpus_stats, saliency_bins
from .ranking import build_ranks, rank_dataset, ranks_to_json, validate_sentence
from .reinforcer import Reinforcer, ReinforcerConfig
from .speaker import Speaker, SpeakerConfig, Vocabulary
from .training import ReinforcerTrainer, SpeakerTrainer, TrainPool

_KNOWN_ERRORS = (ConfigError, DataError, ckpt.CheckpointError, ValueError, FileNotFoundError)


def _fail(exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
    raise SystemExit(1)


def _load(config_path) -> Config:
    return load_config(config_path)


def _out_dir(cfg: Config) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset(cfg: Config):
    return load_dataset(cfg.dataset)


def _build_models(cfg: Config, ds):
    train_sents = [
        s
        for s in ds.sentences.values()
        if ds.objects[s.object_id].scene_id in set(ds.split.train)
    ]
    vocab = Vocabulary.from_sentences(s.tokens for s in train_sents)
    scene = next(iter(ds.scenes.values()))
    obj = next(iter(ds.objects.values()))
    scfg = SpeakerConfig(
        d=cfg.model.d,
        vocab_size=len(vocab),
        k=scene.k,
        l=obj.v_local.shape[1],
        diff_slots=cfg.model.diff_slots,
        max_len=cfg.model.max_len,
        sigma_init=cfg.model.sigma_init,
    )
    rcfg = ReinforcerConfig(
        d=cfg.model.d,
        vocab_size=len(vocab),
        diff_slots=cfg.model.diff_slots,
        sigma_init=cfg.model.sigma_init,
    )
    speaker = Speaker(scfg, vocab, seed=cfg.model.seed)
    reinforcer = Reinforcer(rcfg, vocab, seed=cfg.model.seed + 1)
    return speaker, reinforcer


@click.group(invoke_without_command=True)
@click.option("--print-config", is_flag=True, help="print the default config and exit")
@click.pass_context
def main(ctx, print_config):
    """Desk-scale lab for easy-to-understand referring expressions."""
    if print_config:
        click.echo(default_config_yaml(), nl=False)
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        ctx.exit(0)


@main.command("gen-synth")
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--seed", type=int, default=None, help="override gen.seed")
@click.option("--out", "out_path", default=None, help="output path (default: cfg.dataset)")
def gen_synth(config_path, seed, out_path):
    """Generate a synthetic dataset."""
    try:
        cfg = _load(config_path)
        if seed is not None:
            cfg.gen.seed = seed
        ds = gen_synthetic(cfg.gen)
        path = out_path or cfg.dataset
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, path)
        click.echo(
            json.dumps(
                {
                    "dataset": str(path),
                    "scenes": len(ds.scenes),
                    "objects": len(ds.objects),
                    "sentences": len(ds.sentences),
                    "seed": cfg.gen.seed,
                }
            )
        )
    except _KNOWN_ERRORS as e:
        _fail(e)


@main.command()
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--steps", type=int, default=None, help="override train.steps")
@click.option("--seed", type=int, default=None, help="override train.seed")
@click.option(
    "--stage",
    type=click.Choice(["all", "speaker", "reinforcer"]),
    default="all",
    show_default=True,
)
@click.option("--reinforcer-steps", type=int, default=None)
@click.option("--rank-steps", type=int, default=None, help="joint BCE+rank fine-tune steps")
def train(config_path, steps, seed, stage, reinforcer_steps, rank_steps):
    """Train the reinforcer (pretrain + rank fine-tune) and the speaker."""
    try:
        cfg = _load(config_path)
        if steps is not None:
            cfg.train.steps = steps
        if seed is not None:
            cfg.train.seed = seed
        ds = _dataset(cfg)
        out = _out_dir(cfg)
        ranked = rank_dataset(ds)
        pool = TrainPool(ds, ranked, cfg.model.diff_slots)
        speaker, reinforcer = _build_models(cfg, ds)

        summary = {"stage": stage, "steps": cfg.train.steps, "seed": cfg.train.seed}
        if stage in ("all", "reinforcer"):
            r_steps = reinforcer_steps if reinforcer_steps is not None else cfg.train.steps
            rk_steps = rank_steps if rank_steps is not None else (r_steps // 2)
            rtrainer = ReinforcerTrainer(
                reinforcer, pool, cfg.hyper, _with(cfg.train, steps=r_steps),
                log_path=out / "reinforcer_log.jsonl",
            )
            rtrainer.run(r_steps)
            if cfg.train.enable_rank and rk_steps > 0:
                rtrainer.run(rk_steps, with_rank=True)
            ckpt.save_reinforcer(out / "reinforcer.rxl1", reinforcer, step=len(rtrainer.history), seed=cfg.train.seed)
            summary["reinforcer_checkpoint"] = str(out / "reinforcer.rxl1")
        if stage in ("all", "speaker"):
            use_pg = cfg.train.enable_pg and cfg.hyper.lambda_r > 0
            strainer = SpeakerTrainer(
                speaker, pool, cfg.hyper, cfg.train,
                reinforcer=reinforcer if use_pg else None,
                log_path=out / "speaker_log.jsonl",
            )
            strainer.run()
            ckpt.save_speaker(out / "speaker.rxl1", speaker, step=len(strainer.history), seed=cfg.train.seed)
            summary["speaker_checkpoint"] = str(out / "speaker.rxl1")
        click.echo(json.dumps(summary))
    except _KNOWN_ERRORS as e:
        _fail(e)


def _with(tc, **kw):
    return dataclasses.replace(tc, **kw)


@main.command()
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--checkpoint", "ckpt_path", default=None, help="default: out_dir/speaker.rxl1")
@click.option("--split", default="test", show_default=True)
@click.option("--mode", type=click.Choice(["greedy", "beam", "sample"]), default="greedy")
@click.option("--beam-size", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, help="sampling seed")
@click.option("--trace/--no-trace", default=True, help="include attention traces")
@click.option("-o", "--output", default=None, help="output JSON path (default: stdout)")
def generate(config_path, ckpt_path, split, mode, beam_size, seed, trace, output):
    """Decode referring expressions for every instance of a split."""
    try:
        cfg = _load(config_path)
        ds = _dataset(cfg)
        speaker, _ = ckpt.load_speaker(ckpt_path or Path(cfg.out_dir) / "speaker.rxl1")
        from .features import target_parts
        from .speaker import trace_as_json

        ranked = rank_dataset(ds, ds.split.part(split))
        result = {}
        for oid in sorted(ranked):
            scene = ds.scene_of_object(oid)
            objs = ds.objects_in_scene(scene.scene_id)
            parts = target_parts(scene, objs, ds.objects[oid], cfg.model.diff_slots)
            rng = np.random.default_rng(seed) if mode == "sample" else None
            out = speaker.decode(parts, mode=mode, beam_size=beam_size, rng=rng)
            row = {"tokens": out.tokens, "logprob": out.logprob}
            if trace and out.trace:
                row["attention"] = trace_as_json(out)
            result[oid] = row
        payload = json.dumps(result, indent=2)
        if output:
            Path(output).write_text(payload + "\n")
            click.echo(json.dumps({"written": output, "instances": len(result)}))
        else:
            click.echo(payload)
    except _KNOWN_ERRORS as e:
        _fail(e)


@main.command()
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--checkpoint", "ckpt_path", default=None)
@click.option("--scorer", type=click.Choice(["speaker", "reinforcer"]), default="speaker")
@click.option("--split", default="test", show_default=True)
def comprehend(config_path, ckpt_path, scorer, split):
    """Comprehension accuracy: argmax over a scene's candidate objects."""
    try:
        cfg = _load(config_path)
        ds = _dataset(cfg)
        ranked = rank_dataset(ds)
        if scorer == "speaker":
            model, _ = ckpt.load_speaker(ckpt_path or Path(cfg.out_dir) / "speaker.rxl1")
            res = speaker_comprehension(model, ds, ranked, split)
        else:
            model, _ = ckpt.load_reinforcer(ckpt_path or Path(cfg.out_dir) / "reinforcer.rxl1")
            res = reinforcer_comprehension(model, ds, ranked, split)
        click.echo(
            json.dumps(
                {"scorer": scorer, "split": split, "accuracy": res.accuracy, "sentences": len(res.ground_truth)}
            )
        )
    except _KNOWN_ERRORS as e:
        _fail(e)


@main.command("rank-build")
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--records", default=None, help="annotation record log (default: dataset responses)")
@click.option("--split", default=None, help="restrict to one split")
@click.option("--no-time", is_flag=True, help="rank by accuracy only")
@click.option("-o", "--output", default=None, help="output JSON path (default: stdout)")
def rank_build(config_path, records, split, no_time, output):
    """Build per-instance sentence ranks and ordered pairs."""
    try:
        cfg = _load(config_path)
        ds = _dataset(cfg)
        use_time = not no_time
        if records is not None:
            from .service import responses_from_log, sentences_with_responses

            responses = responses_from_log(ds, records)
            sentences = sentences_with_responses(ds, responses)
            by_target: dict[str, list] = {}
            for s in sentences:
                by_target.setdefault(s.object_id, []).append(s)
            payload = {}
            for oid in sorted(by_target):
                kept = [s for s in by_target[oid] if validate_sentence(s.responses)]
                if not kept:
                    continue
                ranks = build_ranks(kept, use_time=use_time)
                payload[oid] = {
                    sid: {
                        "rank": e.rank,
                        "accuracy": e.accuracy,
                        "better_than_count": e.better_than_count,
                    }
                    for sid, e in ranks.entries.items()
                }
        else:
            scene_ids = ds.split.part(split) if split else None
            ranked = rank_dataset(ds, scene_ids, use_time=use_time)
            payload = ranks_to_json(ranked)
        text = json.dumps(payload, indent=2, sort_keys=True)
        if output:
            Path(output).write_text(text + "\n")
            click.echo(json.dumps({"written": output, "instances": len(payload)}))
        else:
            click.echo(text)
    except _KNOWN_ERRORS as e:
        _fail(e)


@main.command("eval")
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--checkpoint", "ckpt_path", default=None)
@click.option(
    "--metric",
    type=click.Choice(["cider", "r1-cider", "r2-cider", "all", "ranking-pairs", "corpus-stats", "saliency"]),
    default="all",
    show_default=True,
)
@click.option("--split", default="test", show_default=True)
@click.option("--variant", type=click.Choice(["D", "plain"]), default="D", show_default=True)
@click.option("--scorer", type=click.Choice(["speaker", "reinforcer"]), default="reinforcer",
              help="scorer for ranking-pairs")
@click.option("--normalize", is_flag=True, help="saliency: divide by sqrt(box area)")
@click.option("--bins", type=int, default=10, show_default=True)
@click.option("--csv", "csv_path", default=None, help="saliency: export histogram as CSV")
def eval_cmd(config_path, ckpt_path, metric, split, variant, scorer, normalize, bins, csv_path):
    """Metric evaluation on a split."""
    try:
        cfg = _load(config_path)
        ds = _dataset(cfg)
        if metric == "saliency":
            scores, areas = [], []
            for scene in ds.scenes.values():
                if not scene.saliency:
                    continue
                for oid, s in scene.saliency.items():
                    scores.append(s)
                    areas.append(ds.objects[oid].area)
            counts, edges = saliency_bins(scores, areas=areas, normalize=normalize, bins=bins)
            if csv_path:
                with open(csv_path, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["bin_lo", "bin_hi", "count"])
                    for i, c in enumerate(counts):
                        w.writerow([edges[i], edges[i + 1], int(c)])
            click.echo(
                json.dumps(
                    {"metric": "saliency", "normalize": normalize,
                     "counts": counts.tolist(), "edges": edges.tolist()}
                )
            )
            return
        if metric == "ranking-pairs":
            ranked = rank_dataset(ds)
            if scorer == "speaker":
                model, _ = ckpt.load_speaker(ckpt_path or Path(cfg.out_dir) / "speaker.rxl1")
            else:
                model, _ = ckpt.load_reinforcer(ckpt_path or Path(cfg.out_dir) / "reinforcer.rxl1")
            acc, n = ranking_pair_eval(model, ds, ranked, split)
            click.echo(json.dumps({"metric": "ranking-pairs", "scorer": scorer, "accuracy": acc, "pairs": n}))
            return
        speaker, _ = ckpt.load_speaker(ckpt_path or Path(cfg.out_dir) / "speaker.rxl1")
        if metric == "corpus-stats":
            res = generation_eval(speaker, ds, split, variant=variant)
            gen_stats = corpus_stats(list(res.decoded.values()))
            ranked = rank_dataset(ds, ds.split.part(split))
            gt_stats = corpus_stats([s.tokens for inst in ranked.values() for s in inst.kept])
            click.echo(json.dumps({"generated": gen_stats, "ground_truth": gt_stats}))
            return
        res = generation_eval(speaker, ds, split, variant=variant)
        wanted = ["cider", "r1-cider", "r2-cider"] if metric == "all" else [metric]
        out = {
            name: {"metric": rep.metric, "corpus_mean": rep.corpus_mean}
            for name, rep in res.reports.items()
            if name in wanted
        }
        click.echo(json.dumps(out))
    except _KNOWN_ERRORS as e:
        _fail(e)


@main.command()
@click.option("--config", "config_path", default="config.yaml", show_default=True)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--static-dir", default=None, help="directory with the browser UI build")
def serve(config_path, host, port, static_dir):
    """Serve annotation tasks and collect timed responses."""
    try:
        import uvicorn

        from .service import RecordLog, build_app

        cfg = _load(config_path)
        ds = _dataset(cfg)
        out = _out_dir(cfg)
        log = RecordLog(out / cfg.serve.record_log)
        app = build_app(
            ds, log, workers_per_sentence=cfg.serve.workers_per_sentence, static_dir=static_dir
        )
        uvicorn.run(app, host=host or cfg.serve.host, port=port or cfg.serve.port, log_level="warning")
    except _KNOWN_ERRORS as e:
        _fail(e)


if __name__ == "__main__":
    main()
