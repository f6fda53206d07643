"""CLI: train an adapter from instruction JSONL, then serve it."""

from __future__ import annotations

import sys

import click

from sft_adapter.config import SftConfig
from sft_adapter.data import DataError


@click.group()
def main():
    """Low-rank adapter fine-tuning and serving for graph judgement."""


@main.command()
@click.option("--instructions", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--base-model", default="toy-decoder", show_default=True)
@click.option("--steps", type=int, default=None, help="Override training steps.")
@click.option("--micro-batch-size", type=int, default=None)
@click.option("--grad-accum", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def train(instructions, out_dir, base_model, steps, micro_batch_size, grad_accum,
          learning_rate, seed):
    """Fine-tune adapter weights on a judgement-instruction JSONL file."""
    from sft_adapter.train import train as run_train

    cfg = SftConfig(base_model=base_model, seed=seed)
    if steps is not None:
        cfg.training_steps = steps
    if micro_batch_size is not None:
        cfg.micro_batch_size = micro_batch_size
    if grad_accum is not None:
        cfg.gradient_accumulation_steps = grad_accum
    if learning_rate is not None:
        cfg.learning_rate = learning_rate
    try:
        out = run_train(instructions, cfg, out_dir)
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        sys.exit(4)
    click.echo(f"adapter written to {out}")


@main.command()
@click.option("--artifact", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--unconstrained", is_flag=True,
              help="Free greedy decoding instead of scoring the two answers.")
def serve(artifact, host, port, unconstrained):
    """Serve a trained adapter behind /v1/chat/completions."""
    from sft_adapter.serve import serve as run_serve

    run_serve(artifact, host=host, port=port, constrained=not unconstrained)


if __name__ == "__main__":
    main()
