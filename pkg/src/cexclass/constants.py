# Copyright 2025 firefly
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License. 

"""Constants used throughout the cexclass package."""

from typing import Literal

# Fact generation defaults
DEFAULT_MAX_ARITY = 3
DEFAULT_EQ_WINDOW = 12

# Run defaults when neither the command line nor the model frontmatter sets them
DEFAULT_BOUND = 2
DEFAULT_PREDICATES = ("=", "<")

# Built-in predicate names, with accepted spellings
EQ = "="
LT = "<"
NEQ = "!="
TRUE = "true"

BUILTIN_ALIASES = {
    "=": EQ,
    "==": EQ,
    "<": LT,
    "!=": NEQ,
    "≠": NEQ,
    "/=": NEQ,
    "true": TRUE,
    "⊤": TRUE,
}

# Corpus assets
MODEL_SUFFIX = ".ccm"
LIBRARY_SUFFIX = ".ccp"
CORPUS_NAMES = ("running-example", "counter", "nsp-symmetric", "nsp-public-key")

# Largest enumeration accepted as the element type of a set variable
MAX_SET_SYMBOLS = 8

# Report
SCHEMA_VERSION = "1.0"
OutputFormat = Literal["text", "structured"]

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCLASSIFIABLE = 2
EXIT_INTERNAL = 3
