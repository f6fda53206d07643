"""OpenAI-compatible serving of a trained judge adapter.

``/v1/chat/completions`` concatenates the request messages into one
prompt and decodes greedily. Because the judge's output space is the
two canonical answer strings, decoding is constrained by default: both
answers are scored by total log-likelihood and the higher one is
returned, so every reply is machine-parseable. Unconstrained greedy
generation is available via ``constrained=False``.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError

from sft_adapter.data import AFFIRMATIVE, NEGATIVE
from sft_adapter.model import ByteTokenizer, Decoder, greedy_generate, sequence_logprob


class Message(BaseModel):
    role: str
    content: str


class CompletionRequest(BaseModel):
    model: str = "sft-adapter"
    messages: list[Message]
    temperature: float = 0.0
    max_tokens: int = 32


def build_app(model: Decoder, *, constrained: bool = True) -> FastAPI:
    app = FastAPI()
    tok = ByteTokenizer()
    lock = threading.Lock()  # the model is not reentrant; serialize inference
    answers = [AFFIRMATIVE, NEGATIVE]
    answer_ids = [tok.encode(a) for a in answers]

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/chat/completions")
    def completions(req: CompletionRequest):
        if not req.messages:
            return JSONResponse(status_code=400, content={"error": "empty messages"})
        prompt = "\n".join(m.content for m in req.messages)
        prompt_ids = tok.encode(prompt)[-(model.spec.max_seq_len - 64):]
        with lock:
            if constrained:
                scores = [sequence_logprob(model, prompt_ids, a) for a in answer_ids]
                content = answers[max(range(len(answers)), key=lambda i: scores[i])]
            else:
                content = tok.decode(greedy_generate(model, prompt_ids, req.max_tokens))
        return {
            "id": "cmpl-sft-adapter",
            "object": "chat.completion",
            "model": req.model,
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop",
                }
            ],
            "usage": {
                "prompt_tokens": len(prompt_ids),
                "completion_tokens": len(tok.encode(content)),
                "total_tokens": len(prompt_ids) + len(tok.encode(content)),
            },
        }

    return app


def serve(artifact_dir: str, host: str = "127.0.0.1", port: int = 8000,
          constrained: bool = True) -> None:
    import uvicorn

    from sft_adapter.train import load_trained

    model, _ = load_trained(artifact_dir)
    uvicorn.run(build_app(model, constrained=constrained), host=host, port=port)
