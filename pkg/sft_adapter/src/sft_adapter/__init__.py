"""Fine-tune a decoder LM with low-rank adapters as a binary graph judge
and serve it behind the OpenAI-compatible chat-completions protocol."""

from sft_adapter.config import SftConfig

__all__ = ["SftConfig"]
