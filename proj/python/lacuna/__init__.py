# Copyright 2026 The Lacuna Authors
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


"""Python interface to the lacuna contamination and cloze toolkit."""

import json

from . import _lacuna
from ._lacuna import (
    LacunaError,
    bm_contains,
    cosine,
    derive_seed,
    holm_adjust,
    macro_f1,
    midranks,
    normalize,
    render_timeline,
    segment_sentences,
    tfidf_similarity,
)

__version__ = _lacuna.__version__

__all__ = [
    "LacunaError",
    "bm_contains",
    "cliffs_delta",
    "cosine",
    "count_names",
    "derive_seed",
    "hedges_g",
    "holm_adjust",
    "macro_f1",
    "mann_whitney_u",
    "mask",
    "midranks",
    "normalize",
    "paired_t",
    "permutation_mean_test",
    "render_prompt",
    "render_timeline",
    "segment_sentences",
    "sign_test",
    "tfidf_similarity",
    "tune_threshold",
    "welch_t",
    "wilcoxon",
]


def count_names(names, text, word_boundaries=True):
    """Occurrences of each normalized name in text."""
    return json.loads(_lacuna.count_names(list(names), text, word_boundaries))


def tune_threshold(scores, labels):
    return json.loads(_lacuna.tune_threshold_json(list(scores), list(labels)))


def sign_test(a, b, sidedness="two_sided"):
    return json.loads(_lacuna.sign_test_json(list(a), list(b), sidedness))


def paired_t(a, b, sidedness="two_sided"):
    return json.loads(_lacuna.paired_t_json(list(a), list(b), sidedness))


def wilcoxon(a, b, sidedness="two_sided"):
    return json.loads(_lacuna.wilcoxon_json(list(a), list(b), sidedness))


def welch_t(a, b, sidedness="two_sided"):
    return json.loads(_lacuna.welch_t_json(list(a), list(b), sidedness))


def mann_whitney_u(a, b, sidedness="two_sided"):
    return json.loads(_lacuna.mann_whitney_u_json(list(a), list(b), sidedness))


def permutation_mean_test(a, b, iterations=10000, seed=0, sidedness="two_sided"):
    return json.loads(
        _lacuna.permutation_mean_test_json(list(a), list(b), iterations, seed, sidedness)
    )


def cliffs_delta(a, b):
    return json.loads(_lacuna.cliffs_delta_json(list(a), list(b)))


def hedges_g(a, b):
    return json.loads(_lacuna.hedges_g_json(list(a), list(b)))


def mask(csv_text, kind="full", position=1, k=1):
    """Cloze instance (as a dict) built from a timeline CSV string."""
    return json.loads(_lacuna.mask_json(csv_text, kind, position, k))


def render_prompt(instance, template="base", hint=False):
    """{"system": str | None, "user": str} for a cloze instance dict."""
    return json.loads(_lacuna.render_prompt_json(json.dumps(instance), template, hint))
