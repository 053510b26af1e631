"""Command-line entry point wiring every stage of the pipeline.

Every subcommand writes a manifest.json (resolved config, seed, git hash)
next to its outputs, and all randomness flows from the --seed flag, so runs
are reproducible byte for byte.
"""

import json
import sys
from pathlib import Path

import click
import numpy as np
import torch

from .errors import CatalogError, ValidationError
from .manifest import write_manifest
from .ndjson import read_ndjson, write_ndjson
from .dataset.borda import aggregate_and_extract, group_records_by_list
from .dataset.repository import AssetRepository
from .dataset.simulate import simulate_rankings
from .dataset.splits import split_dataset
from .dataset.synthetic import (
    SyntheticAssetConfig,
    generate_prompt_image,
    generate_synthetic_asset,
)
from .dataset.types import ComparisonPair, ImagePrompt, RankingRecord

DEFAULT_METHODS = "alpha:0.95,bravo:0.75,charlie:0.5,delta:0.25"


def _fail(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


@click.group()
def main():
    """Human-preference pipeline for multi-view generation."""


def run_guarded(fn):
    try:
        fn()
    except (ValidationError, CatalogError, FileNotFoundError, ValueError) as e:
        _fail(str(e))
    except KeyError as e:
        _fail(f"missing field: {e}")


# -- prepare-data --------------------------------------------------------------

@main.command("prepare-data")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--n-prompts", default=20, show_default=True)
@click.option("--n-views", default=6, show_default=True)
@click.option("--image-size", default=32, show_default=True)
@click.option("--methods", default=DEFAULT_METHODS, show_default=True,
              help="comma-separated method:quality pairs")
@click.option("--simulate-annotators", default=3, show_default=True,
              help="simulated annotators writing rankings.ndjson (0 = none)")
@click.option("--seed", default=0, show_default=True)
def prepare_data(out_dir, n_prompts, n_views, image_size, methods,
                 simulate_annotators, seed):
    """Generate a synthetic corpus: prompts, assets, asset lists, rankings."""

    def run():
        methods_q = {}
        for part in methods.split(","):
            name, q = part.split(":")
            methods_q[name.strip()] = float(q)
        if not 4 <= len(methods_q) <= 5:
            raise ValidationError("need 4-5 methods to form rankable asset lists")

        repo = AssetRepository(out_dir)
        cfg = SyntheticAssetConfig(n_views=n_views, image_size=image_size)
        prompts, images, assets, lists, qualities = [], {}, [], [], {}
        for i in range(n_prompts):
            pid = f"p{i:04d}"
            prompt = ImagePrompt(id=pid, source="generated",
                                 image_path=f"prompt_images/{pid}.png")
            prompts.append(prompt)
            images[pid] = generate_prompt_image(pid, image_size, seed)
            list_assets = []
            for method, quality in methods_q.items():
                asset = generate_synthetic_asset(
                    prompt, quality, seed, cfg, prompt_image=images[pid],
                    method_id=method)
                assets.append(asset)
                qualities[asset.id] = quality
                list_assets.append(asset.id)
            lists.append({"asset_list_id": pid, "prompt_id": pid,
                          "asset_ids": list_assets})
        repo.save_prompts(prompts, images)
        repo.save_assets(assets, extra={a.id: {"quality": qualities[a.id]}
                                        for a in assets})
        repo.save_asset_lists(lists)
        roster = [{"id": f"sim{a:02d}", "role": "annotator"}
                  for a in range(max(simulate_annotators, 1))]
        roster.append({"id": "researcher0", "role": "researcher"})
        repo.save_annotators(roster)
        if simulate_annotators > 0:
            records = simulate_rankings(lists, qualities, simulate_annotators, seed)
            write_ndjson(Path(out_dir) / "rankings.ndjson",
                         (r.to_json() for r in records))
        write_manifest(out_dir, "prepare-data", {
            "n_prompts": n_prompts, "n_views": n_views,
            "image_size": image_size, "methods": methods_q,
            "simulate_annotators": simulate_annotators,
        }, seed)
        click.echo(f"wrote corpus with {len(assets)} assets to {out_dir}")

    run_guarded(run)


# -- serve-annotations -----------------------------------------------------------

@main.command("serve-annotations")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              envvar="MVPREF_DATA_ROOT", show_envvar=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8600, show_default=True)
@click.option("--cap", default=400, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_annotations(data_dir, host, port, cap, seed):
    """Serve ranking tasks over HTTP from a prepared corpus."""
    import uvicorn

    from .annotation import AnnotationStore, create_app

    repo = AssetRepository(data_dir)
    store = AnnotationStore(
        repo.asset_lists(), repo.annotators(), cap=cap, seed=seed,
        journal_path=Path(data_dir) / "rankings_journal.ndjson")
    uvicorn.run(create_app(store, repo=repo), host=host, port=port)


# -- aggregate -------------------------------------------------------------------

@main.command("aggregate")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="rankings ndjson")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--lists", "lists_path", type=click.Path(exists=True),
              help="asset_lists.ndjson mapping list ids to prompt ids")
def aggregate(in_path, out_path, lists_path):
    """Borda-merge rankings and emit tie-free comparison pairs."""

    def run():
        records = [RankingRecord.from_json(o) for o in read_ndjson(in_path)]
        grouped = group_records_by_list(records)
        if lists_path:
            prompt_of = {o["asset_list_id"]: o["prompt_id"]
                         for o in read_ndjson(lists_path)}
        else:
            prompt_of = {lid: lid for lid in grouped}
        pairs = aggregate_and_extract(grouped, prompt_of)
        write_ndjson(out_path, (p.to_json() for p in pairs))
        write_manifest(Path(out_path).parent, "aggregate",
                       {"in": str(in_path), "out": str(out_path),
                        "lists": str(lists_path) if lists_path else None}, None)
        click.echo(f"{len(pairs)} pairs from {len(grouped)} asset lists -> {out_path}")

    run_guarded(run)


# -- reward model ----------------------------------------------------------------

def _load_pair_dataset(data_dir, pairs_path, seed):
    from .reward.training import PairDataset

    repo = AssetRepository(data_dir)
    pairs = [ComparisonPair.from_json(o) for o in read_ndjson(pairs_path)]
    train, val, test = split_dataset(pairs, seed=seed)
    prompt_images = {pid: repo.prompt_image(pid) for pid in repo.prompts()}
    assets = repo.load_all_assets()
    return PairDataset(prompt_images, assets, train, val, test)


def _reward_config(data_dir, config_path, overrides):
    from .reward.model import RewardModelConfig

    meta = next(iter(AssetRepository(data_dir).asset_metadata().values()), None)
    base = {}
    if meta is not None:
        base.update(n_views=meta["n_views"], domains=tuple(meta["domains"]))
        probe = AssetRepository(data_dir).prompt_image(meta["prompt_id"])
        base["image_size"] = probe.shape[0]
        base["patch_size"] = max(probe.shape[0] // 4, 4)
    if config_path:
        base.update(json.loads(Path(config_path).read_text()).get("model", {}))
    base.update({k: v for k, v in overrides.items() if v is not None})
    return RewardModelConfig(**base)


@main.command("train-reward")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              envvar="MVPREF_DATA_ROOT", show_envvar=True)
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              help='JSON config: {"model": {...}, "train": {...}}')
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", "learning_rate", type=float, default=None)
@click.option("--token-dim", type=int, default=None)
@click.option("--no-negatives", is_flag=True, default=False)
@click.option("--seed", default=0, show_default=True)
def train_reward_cmd(data_dir, pairs_path, out_dir, config_path, epochs,
                     batch_size, learning_rate, token_dim, no_negatives, seed):
    """Train the reward model on comparison pairs."""

    def run():
        from .reward.model import MultiViewRewardModel, save_checkpoint
        from .reward.training import TrainConfig, train_reward

        model_cfg = _reward_config(data_dir, config_path,
                                   {"token_dim": token_dim})
        train_kwargs = {}
        if config_path:
            train_kwargs.update(json.loads(Path(config_path).read_text()).get("train", {}))
        for key, value in [("epochs", epochs), ("batch_size", batch_size),
                           ("learning_rate", learning_rate), ("seed", seed)]:
            if value is not None:
                train_kwargs[key] = value
        if no_negatives:
            train_kwargs["negatives_enabled"] = False
        train_cfg = TrainConfig(**train_kwargs)

        data = _load_pair_dataset(data_dir, pairs_path, train_cfg.seed)
        model = MultiViewRewardModel(model_cfg, seed=train_cfg.seed)
        model, report = train_reward(model, data, train_cfg)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, out / "reward.pt")
        # wall time stays out of report.json so identical reruns are
        # byte-identical; it is echoed instead
        metrics = {k: v for k, v in report.to_json().items() if k != "wall_time_s"}
        (out / "report.json").write_text(json.dumps(metrics, indent=2) + "\n")
        write_manifest(out_dir, "train-reward", {
            "model": model_cfg.to_json(), "train": train_cfg.to_json(),
            "data": str(data_dir), "pairs": str(pairs_path),
        }, train_cfg.seed)
        acc = report.test_accuracy
        click.echo(f"trained in {report.wall_time_s:.1f}s; test pair accuracy: "
                   f"{acc if acc is not None else 'n/a'}")

    run_guarded(run)


@main.command("eval-reward")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              envvar="MVPREF_DATA_ROOT", show_envvar=True)
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def eval_reward_cmd(checkpoint, data_dir, pairs_path, out_dir, seed):
    """Pair accuracy of a trained reward model on a pair file."""

    def run():
        from .reward.model import load_checkpoint
        from .reward.training import PairDataset, eval_pair_accuracy

        repo = AssetRepository(data_dir)
        pairs = [ComparisonPair.from_json(o) for o in read_ndjson(pairs_path)]
        data = PairDataset({pid: repo.prompt_image(pid) for pid in repo.prompts()},
                           repo.load_all_assets(), pairs)
        model = load_checkpoint(checkpoint)
        accuracy = eval_pair_accuracy(model, pairs, data)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(json.dumps({
            "pair_accuracy": accuracy, "n_pairs": len(pairs)}, indent=2) + "\n")
        write_manifest(out_dir, "eval-reward",
                       {"checkpoint": str(checkpoint), "pairs": str(pairs_path)},
                       seed)
        click.echo(f"pair accuracy: {accuracy:.4f} over {len(pairs)} pairs")

    run_guarded(run)


# -- diffusion --------------------------------------------------------------------

@main.command("pretrain-dm")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--steps", default=300, show_default=True)
@click.option("--n-prompts", default=16, show_default=True)
@click.option("--n-views", default=2, show_default=True)
@click.option("--image-size", default=16, show_default=True)
@click.option("--hidden", default=16, show_default=True)
@click.option("--t-steps", default=1000, show_default=True)
@click.option("--schedule", type=click.Choice(["linear", "cosine"]),
              default="linear", show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--sample-grid/--no-sample-grid", default=True, show_default=True,
              help="emit a PNG grid sampled from the trained model")
@click.option("--seed", default=0, show_default=True)
def pretrain_dm(out_dir, steps, n_prompts, n_views, image_size, hidden,
                t_steps, schedule, lr, batch_size, sample_grid, seed):
    """Pretrain the toy multi-view diffusion model on synthetic assets."""

    def run():
        from .diffusion import (
            DiffusionConfig,
            MultiViewDiffusion,
            NoiseScheduler,
            PretrainConfig,
            make_synthetic_corpus,
            pretrain,
            save_diffusion_checkpoint,
        )

        cfg = DiffusionConfig(n_views=n_views, image_size=image_size, hidden=hidden)
        model = MultiViewDiffusion(cfg, seed=seed)
        sched = NoiseScheduler(t_steps=t_steps, schedule=schedule)
        corpus = make_synthetic_corpus(n_prompts, n_views, image_size, seed)
        model, report = pretrain(model, sched, corpus, PretrainConfig(
            steps=steps, batch_size=batch_size, learning_rate=lr, seed=seed))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_diffusion_checkpoint(model, sched, out / "dm.pt")
        write_ndjson(out / "losses.ndjson",
                     ({"step": i, "loss": l} for i, l in enumerate(report.losses)))
        if sample_grid:
            _emit_sample_grid(model, sched, corpus, out / "samples.png", seed)
        write_manifest(out_dir, "pretrain-dm", {
            "diffusion": cfg.to_json(), "scheduler": sched.to_json(),
            "steps": steps, "n_prompts": n_prompts, "lr": lr,
            "batch_size": batch_size,
        }, seed)
        click.echo(f"pretrained {steps} steps; final loss {report.losses[-1]:.4f}")

    run_guarded(run)


def _emit_sample_grid(model, sched, corpus, path, seed):
    from .imageio import save_image

    views = model.sample(corpus.prompts[0], sched, seed=seed)
    arrays = [v.permute(1, 2, 0).numpy() for v in views]
    save_image(path, np.concatenate(arrays, axis=1))


# -- tune ---------------------------------------------------------------------------

@main.command("tune-mvp")
@click.option("--mode", type=click.Choice(["mvp", "pt-only"]), default="mvp",
              show_default=True)
@click.option("--dm-checkpoint", required=True, type=click.Path(exists=True))
@click.option("--reward-checkpoint", type=click.Path(exists=True),
              help="required in mvp mode")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--lambda", "lambda_pt", default=10.0, show_default=True)
@click.option("--psi", type=click.Choice(["negated", "softplus_negated"]),
              default="softplus_negated", show_default=True)
@click.option("--midstep", default="0.75,0.99", show_default=True,
              help="lo,hi fractions of denoising progress")
@click.option("--steps", default=100, show_default=True)
@click.option("--lr", default=5e-6, show_default=True)
@click.option("--warmup-steps", default=10, show_default=True)
@click.option("--batch-size", default=4, show_default=True)
@click.option("--trainable-scope", default="all", show_default=True,
              type=click.Choice(["all", "attention", "cross_view", "output"]))
@click.option("--n-prompts", default=16, show_default=True)
@click.option("--checkpoint-every", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def tune_mvp(mode, dm_checkpoint, reward_checkpoint, out_dir, lambda_pt, psi,
             midstep, steps, lr, warmup_steps, batch_size, trainable_scope,
             n_prompts, checkpoint_every, seed):
    """Fine-tune a pretrained diffusion model against the reward model."""

    def run():
        from .diffusion import (
            load_diffusion_checkpoint,
            make_synthetic_corpus,
            save_diffusion_checkpoint,
        )
        from .reward.model import load_checkpoint
        from .tuning import TuningConfig, tune

        lo, hi = (float(x) for x in midstep.split(","))
        cfg = TuningConfig(
            trainable_scope=trainable_scope, lambda_pt=lambda_pt, psi=psi,
            midstep_range=(lo, hi), learning_rate=lr, warmup_steps=warmup_steps,
            steps=steps, batch_size=batch_size, mode=mode, seed=seed,
            checkpoint_every=checkpoint_every)
        model, sched = load_diffusion_checkpoint(dm_checkpoint)
        reward = None
        if mode == "mvp":
            if not reward_checkpoint:
                raise ValidationError("--reward-checkpoint is required in mvp mode")
            reward = load_checkpoint(reward_checkpoint)
        corpus = make_synthetic_corpus(
            n_prompts, model.cfg.n_views, model.cfg.image_size, seed)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        model, history = tune(model, sched, reward, corpus, cfg,
                              checkpoint_dir=out)
        save_diffusion_checkpoint(model, sched, out / "tuned.pt")
        write_ndjson(out / "history.ndjson", history.to_ndjson_records())
        write_manifest(out_dir, "tune-mvp", {
            "tuning": cfg.to_json(), "dm_checkpoint": str(dm_checkpoint),
            "reward_checkpoint": str(reward_checkpoint) if reward_checkpoint else None,
            "n_prompts": n_prompts,
        }, seed)
        last = history.records[-1] if history.records else {}
        click.echo(f"tuned {len(history.records)} steps; "
                   f"final combined loss {last.get('combined', float('nan')):.4f}")

    run_guarded(run)


# -- evaluation ----------------------------------------------------------------------

@main.command("evaluate")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--human", "human_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def evaluate_cmd(scores_path, human_path, out_dir):
    """Rank methods per metric and correlate every metric with human favor."""

    def run():
        from .evaluation import (
            build_score_tables,
            load_human_favor,
            load_score_rows,
            rank_methods,
            render_report_text,
        )

        tables = build_score_tables(load_score_rows(scores_path))
        favor = load_human_favor(human_path)
        report = rank_methods(tables, favor)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        text = render_report_text(report)
        (out / "report.txt").write_text(text)
        write_manifest(out_dir, "evaluate",
                       {"scores": str(scores_path), "human": str(human_path)},
                       None)
        click.echo(text)

    run_guarded(run)


@main.command("report")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def report_cmd(report_path, out_dir):
    """Render simple chart files from an evaluation report."""

    def run():
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        payload = json.loads(Path(report_path).read_text())
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        metrics = payload["metrics"]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        names = [m["metric_id"] for m in metrics]
        rhos = [m["spearman_to_human"] for m in metrics]
        ax.bar(names, rhos, color="#4878cf")
        ax.set_ylabel("Spearman to human ranking")
        ax.set_ylim(-1, 1)
        ax.axhline(0, color="black", linewidth=0.8)
        fig.tight_layout()
        fig.savefig(out / "spearman.png", dpi=120)
        plt.close(fig)

        for metric in metrics:
            fig, ax = plt.subplots(figsize=(6, 3.5))
            methods = sorted(metric["means"], key=lambda m: metric["ranks"][m])
            ax.bar(methods, [metric["means"][m] for m in methods], color="#6acc64")
            ax.set_ylabel(f"mean {metric['metric_id']} score")
            ax.tick_params(axis="x", rotation=30)
            fig.tight_layout()
            fig.savefig(out / f"scores_{metric['metric_id']}.png", dpi=120)
            plt.close(fig)
        write_manifest(out_dir, "report", {"report": str(report_path)}, None)
        click.echo(f"charts written to {out_dir}")

    run_guarded(run)


if __name__ == "__main__":
    main()
