#!/usr/bin/env python3
"""Prepends the Apache-2.0 header to C++ sources that lack it.

Usage: scripts/add_license_headers.py [repo_root]
"""
import pathlib
import sys

HEADER = """// {path}

// Copyright 2026  The svbackend Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

"""

DIRS = ("core", "tools", "tests", "benchmarks")
SUFFIXES = {".cc", ".h"}


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".").resolve()
    changed = 0
    for d in DIRS:
        for f in sorted((root / d).rglob("*")):
            if f.suffix not in SUFFIXES or not f.is_file():
                continue
            text = f.read_text()
            if "Licensed under the Apache License" in text[:1200]:
                continue
            f.write_text(HEADER.format(path=f.relative_to(root).as_posix()) + text)
            changed += 1
    print(f"added headers to {changed} files")


if __name__ == "__main__":
    main()
