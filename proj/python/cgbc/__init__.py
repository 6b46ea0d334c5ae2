# Copyright 2026 The CGBC Authors
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


"""Concept-guided Bayesian zero-shot classification.

Thin wrapper over the C++ core: embedding containers, robust aggregation,
DPP selection, diagnostics and the synthetic fixtures.
"""

from cgbc._cgbc import (  # noqa: F401
    CLIP_LOGIT_SCALE,
    DataError,
    EmbeddingContainer,
    aggregate,
    build_neighborhoods,
    classify,
    contrastive_prompt,
    cosine_sim,
    describe,
    greedy_map,
    load_container,
    log_det,
    make_synthetic,
    median,
    parse_concepts,
    render_prompt,
    request_digest,
    run_cli,
    save_container,
    soft_trim_weights,
    theorem1_sweep,
)

__version__ = "0.1.0"
