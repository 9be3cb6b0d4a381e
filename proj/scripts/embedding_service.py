#!/usr/bin/env python3
"""Layered embedding service for the `reference` provider.

POST {"text": ...} -> {"pieces": [{"text", "start", "end"}], "layers": [[[...]]]}
Offsets are code points; special pieces get start == end. Every hidden layer
of the model is returned (the client averages the last ones).

    pip install torch transformers
    python3 scripts/embedding_service.py --model bert-large-cased --port 8501
"""

import argparse
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch
from transformers import AutoModel, AutoTokenizer


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="bert-large-cased")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8501)
    args = ap.parse_args()

    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModel.from_pretrained(args.model, output_hidden_states=True).eval()

    def embed(text):
        enc = tokenizer(text, return_offsets_mapping=True, return_tensors="pt", truncation=True)
        offsets = enc.pop("offset_mapping")[0].tolist()
        with torch.no_grad():
            hidden = model(**enc).hidden_states[1:]  # drop the input embeddings
        ids = enc["input_ids"][0].tolist()
        pieces = [{"text": tokenizer.convert_ids_to_tokens(i), "start": s, "end": e}
                  for i, (s, e) in zip(ids, offsets)]
        return {"pieces": pieces, "layers": [layer[0].tolist() for layer in hidden]}

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            try:
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                payload = json.dumps(embed(body["text"])).encode()
                self.send_response(200)
            except Exception as e:  # report, keep serving
                payload = json.dumps({"error": str(e)}).encode()
                self.send_response(400)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *_):
            pass

    ThreadingHTTPServer((args.host, args.port), Handler).serve_forever()


if __name__ == "__main__":
    main()
