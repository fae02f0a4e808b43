# Copyright 2026 The embsim Authors.
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
"""Row-wise sharded embedding bag simulator."""

from ._embsim import (
    ConfigError,
    CostModel,
    Error,
    OutOfRangeError,
    ProtocolError,
    RoutingError,
    ShapeError,
    UnimplementedError,
    ValidationError,
    embedding_bag_forward,
    gpus_required,
    oracle_embedding_bag,
    owner_of_row,
    plan_row_wise,
    project,
    run_preset,
    synth_batch,
    synth_table,
    validate,
)

__all__ = [
    "ConfigError",
    "CostModel",
    "Error",
    "OutOfRangeError",
    "ProtocolError",
    "RoutingError",
    "ShapeError",
    "UnimplementedError",
    "ValidationError",
    "embedding_bag_forward",
    "gpus_required",
    "oracle_embedding_bag",
    "owner_of_row",
    "plan_row_wise",
    "project",
    "run_preset",
    "synth_batch",
    "synth_table",
    "validate",
]
