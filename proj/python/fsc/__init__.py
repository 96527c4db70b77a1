# Copyright 2026 The fsc Authors.
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

"""Fixed sub-center classification: head, losses, data and training."""

import json

from . import _fsc
from ._fsc import (
    ContractError,
    IoError,
    SubCenterBank,
    dispersion_stats,
    forward,
    fsc_loss,
    init_centers,
    kaiming_uniform_bound,
    loss_grad_features,
    make_bank,
    recall_at_k,
    top1_accuracy,
)

__all__ = [
    "ContractError",
    "IoError",
    "SubCenterBank",
    "dispersion_stats",
    "forward",
    "fsc_loss",
    "generate_mixture",
    "init_centers",
    "kaiming_uniform_bound",
    "loss_grad_features",
    "make_bank",
    "recall_at_k",
    "top1_accuracy",
    "train",
]


def generate_mixture(**spec):
    """Synthetic multi-modal mixture; keyword arguments override the defaults."""
    return _fsc.generate_mixture(json.dumps(spec))


def train(train=None, mixture=None, data=None):
    """Trains one model in memory and returns its test-split report.

    `train`, `mixture` and `data` take the same keys as the JSON config file.
    """
    config = {}
    if train:
        config["train"] = train
    if mixture:
        config["mixture"] = mixture
    if data:
        config["data"] = data
    return json.loads(_fsc.train(json.dumps(config)))
