#!/usr/bin/env python3
# Copyright 2026 The embalign Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Build a desk-scale English corpus from the docstrings of installed Python packages.

Each unique docstring becomes one document (one line). Documents are emitted in a
deterministic order (sorted by content hash), so the corpus is reproducible on a
given machine. Lines that look like code or tables are dropped.
"""
import argparse
import ast
import hashlib
import os
import re
import site
import sys

PROSE = re.compile(r"[A-Za-z]{2,}")


def candidate_roots():
    roots = []
    for r in site.getsitepackages() + [os.path.dirname(os.__file__)]:
        r = os.path.realpath(r)
        if os.path.isdir(r) and r not in roots:
            roots.append(r)
    return roots


def prose_lines(doc):
    out = []
    for line in doc.splitlines():
        s = line.strip()
        if not s or s.startswith((">>>", "...", "..", "|", "+", "=", "-", ":")):
            continue
        words = PROSE.findall(s)
        # mostly-words lines only
        if len(words) < 3 or sum(len(w) for w in words) < 0.6 * len(s):
            continue
        out.append(s)
    return " ".join(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--max-bytes", type=int, default=50_000_000)
    ap.add_argument("--keep-existing", action="store_true",
                    help="do nothing if --out already exists and is non-empty")
    args = ap.parse_args()
    if args.keep_existing and os.path.exists(args.out) and os.path.getsize(args.out) > 0:
        print(f"{args.out} exists, keeping it", file=sys.stderr)
        return

    seen = {}
    for root in candidate_roots():
        for dp, dn, fn in os.walk(root):
            dn.sort()
            for f in sorted(fn):
                if not f.endswith(".py"):
                    continue
                try:
                    with open(os.path.join(dp, f), encoding="utf-8", errors="replace") as fh:
                        tree = ast.parse(fh.read())
                except (SyntaxError, ValueError, RecursionError, OSError):
                    continue
                for node in ast.walk(tree):
                    if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
                        doc = ast.get_docstring(node)
                        if not doc:
                            continue
                        text = prose_lines(doc)
                        if len(text) < 40:
                            continue
                        key = hashlib.sha1(text.encode("utf-8")).hexdigest()
                        seen.setdefault(key, text)

    total = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for key in sorted(seen):
            line = seen[key] + "\n"
            n = len(line.encode("utf-8"))
            if total + n > args.max_bytes:
                break
            out.write(line)
            total += n
    print(f"{len(seen)} unique documents, wrote {total} bytes to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
