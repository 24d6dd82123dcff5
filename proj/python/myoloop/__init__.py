# Copyright 2026 The myoloop Authors
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

"""Myoelectric control and haptic feedback simulator."""

from ._myoloop import (
    MyoloopError,
    Session,
    calibrate,
    mann_whitney_exact,
    mann_whitney_normal,
    mann_whitney_u,
    run_study,
    run_trial,
    vibration_profile,
    w1,
)

__all__ = [
    "MyoloopError",
    "Session",
    "calibrate",
    "mann_whitney_exact",
    "mann_whitney_normal",
    "mann_whitney_u",
    "run_study",
    "run_trial",
    "vibration_profile",
    "w1",
]
