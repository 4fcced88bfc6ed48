#!/usr/bin/env python3
"""Serve a Hugging Face masked LM over the lpbias HTTP protocol.

    python3 tools/mlm_server.py --model bert-base-uncased --port 8765
    lpbias probe --backend http:127.0.0.1:8765 --category data/stimuli/career_family.json

Endpoints (JSON bodies):
    GET  /info      {"name", "embedding_dimension", "mask_token"}
    GET  /vocab     {"tokens"}
    POST /tokenize  {"text"} -> {"tokens", "offsets"}   byte offsets, specials dropped
    POST /predict   {"tokens", "positions", "candidates"?} -> {"distributions"}
    POST /embed     {"tokens", "positions"} -> {"vectors"}   final layer
"""

import argparse
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

log = logging.getLogger("mlm_server")


class ClientError(Exception):
    def __init__(self, message, unknown_token=None):
        super().__init__(message)
        self.unknown_token = unknown_token


class MaskedLM:
    def __init__(self, name, device):
        self.name = name
        self.tokenizer = AutoTokenizer.from_pretrained(name)
        if not self.tokenizer.is_fast:
            raise SystemExit("a fast tokenizer is required for offset mapping")
        self.model = AutoModelForMaskedLM.from_pretrained(name).to(device).eval()
        self.device = device
        self.vocab = self.tokenizer.get_vocab()
        self.id_to_token = {i: t for t, i in self.vocab.items()}
        self.lock = threading.Lock()

    def info(self):
        return {"name": self.name, "embedding_dimension": self.model.config.hidden_size,
                "mask_token": self.tokenizer.mask_token}

    def tokens(self):
        return [self.id_to_token[i] for i in range(len(self.id_to_token))]

    def tokenize(self, text):
        enc = self.tokenizer(text, add_special_tokens=False, return_offsets_mapping=True)
        # Character offsets to UTF-8 byte offsets.
        starts = [0]
        for ch in text:
            starts.append(starts[-1] + len(ch.encode("utf-8")))
        tokens = self.tokenizer.convert_ids_to_tokens(enc["input_ids"])
        offsets = [[starts[b], starts[e]] for b, e in enc["offset_mapping"]]
        return {"tokens": tokens, "offsets": offsets}

    def _ids(self, tokens):
        ids = []
        for t in tokens:
            if t not in self.vocab:
                raise ClientError("unknown token", unknown_token=t)
            ids.append(self.vocab[t])
        return [self.tokenizer.cls_token_id] + ids + [self.tokenizer.sep_token_id]

    def _positions(self, tokens, positions):
        for p in positions:
            if not isinstance(p, int) or p < 0 or p >= len(tokens):
                raise ClientError(f"position {p} out of range")
        return [p + 1 for p in positions]  # shift past [CLS]

    def _forward(self, tokens, hidden):
        ids = torch.tensor([self._ids(tokens)], device=self.device)
        with self.lock, torch.no_grad():
            return self.model(input_ids=ids, output_hidden_states=hidden)

    def predict(self, tokens, positions, candidates=None):
        shifted = self._positions(tokens, positions)
        cand_ids = None
        if candidates is not None:
            cand_ids = []
            for c in candidates:
                if c not in self.vocab:
                    raise ClientError("unknown token", unknown_token=c)
                cand_ids.append(self.vocab[c])
        logits = self._forward(tokens, hidden=False).logits[0]
        out = []
        for p, s in zip(positions, shifted):
            probs = torch.softmax(logits[s].double(), dim=-1)
            if cand_ids is None:
                table = {self.id_to_token[i]: v for i, v in enumerate(probs.tolist())}
            else:
                table = {c: probs[i].item() for c, i in zip(candidates, cand_ids)}
            out.append({"position": p, "probabilities": table})
        return {"distributions": out}

    def embed(self, tokens, positions):
        shifted = self._positions(tokens, positions)
        last = self._forward(tokens, hidden=True).hidden_states[-1][0]
        return {"vectors": [last[s].double().tolist() for s in shifted]}


def make_handler(lm):
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status, obj):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _dispatch(self, fn):
            try:
                self._reply(200, fn())
            except ClientError as e:
                reply = {"error": str(e)}
                if e.unknown_token is not None:
                    reply["unknown_token"] = e.unknown_token
                self._reply(400, reply)
            except (KeyError, TypeError, ValueError) as e:
                self._reply(400, {"error": f"bad request: {e}"})
            except Exception as e:  # noqa: BLE001
                log.exception("request failed")
                self._reply(500, {"error": str(e)})

        def do_GET(self):
            routes = {"/info": lm.info, "/vocab": lambda: {"tokens": lm.tokens()}}
            if self.path not in routes:
                self._reply(404, {"error": "no such endpoint"})
                return
            self._dispatch(routes[self.path])

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                req = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError as e:
                self._reply(400, {"error": f"malformed JSON: {e}"})
                return
            routes = {
                "/tokenize": lambda: lm.tokenize(req["text"]),
                "/predict": lambda: lm.predict(req["tokens"], req["positions"], req.get("candidates")),
                "/embed": lambda: lm.embed(req["tokens"], req["positions"]),
            }
            if self.path not in routes:
                self._reply(404, {"error": "no such endpoint"})
                return
            self._dispatch(routes[self.path])

        def log_message(self, fmt, *args):
            log.debug(fmt, *args)

    return Handler


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", default="bert-base-uncased", help="model name or local directory")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--port-file", help="write the bound port here once listening (use with --port 0)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    torch.manual_seed(0)
    lm = MaskedLM(args.model, args.device)
    server = ThreadingHTTPServer((args.host, args.port), make_handler(lm))
    port = server.server_address[1]
    if args.port_file:
        with open(args.port_file, "w") as f:
            f.write(f"{port}\n")
    log.info("serving %s on %s:%d", args.model, args.host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
