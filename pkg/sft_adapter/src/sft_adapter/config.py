"""Fine-tuning configuration. Defaults are the production judge recipe;
smoke runs override sizes and step counts explicitly."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class SftConfig:
    micro_batch_size: int = 8
    gradient_accumulation_steps: int = 16
    training_steps: int = 500
    learning_rate: float = 3e-4
    adapter_rank: int = 8
    adapter_alpha: int = 16
    adapter_target_modules: tuple[str, ...] = ("q_proj", "v_proj")
    warmup_steps: int = 100
    optimizer: str = "adamw"
    base_model: str = "toy-decoder"
    seed: int = 0
    max_seq_len: int = 2048  # context head-truncated beyond this

    @property
    def effective_batch_size(self) -> int:
        return self.micro_batch_size * self.gradient_accumulation_steps

    def __post_init__(self):
        if self.micro_batch_size < 1 or self.gradient_accumulation_steps < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.adapter_rank < 1:
            raise ValueError("adapter_rank must be >= 1")
        if self.optimizer != "adamw":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(asdict(self) | {"effective_batch_size": self.effective_batch_size},
                       indent=2, sort_keys=True),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "SftConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.pop("effective_batch_size", None)
        data["adapter_target_modules"] = tuple(data["adapter_target_modules"])
        return cls(**data)
