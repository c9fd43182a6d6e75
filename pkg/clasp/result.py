#!/usr/bin/env python
# Copyright 2026 clasp developers
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
"""
Output of a single inference run, shared by every estimator
"""

from dataclasses import dataclass, replace
from typing import Any, Optional

import numpy as np
from scipy.special import entr

METHODS = ('MF', 'Bethe', 'TRW', 'Exact')


def entropy(p):
    '''Shannon entropy in nats with ``0 log 0 = 0``

    >>> round(float(entropy([0.5, 0.5])), 6)
    0.693147
    '''
    return float(np.sum(entr(np.asarray(p, dtype=float))))


@dataclass(frozen=True)
class InferenceResult:
    """Estimate of ``A(theta)`` from one method

    Attributes:
        log_z: the estimate, including any constants carried out by clamping
        marginals: :class:`~clasp.meanfield.FactorizedMarginals` or
            :class:`~clasp.bethe.PseudoMarginals` (``None`` for ``Exact``)
        method: one of ``MF``, ``Bethe``, ``TRW``, ``Exact``
        bound: ``lower``, ``upper`` or ``none``
        converged: the run that produced the estimate reached tolerance
        iters: sweeps or message iterations of the selected run
        wall_time: seconds spent, all restarts included
        rho: edge appearance probabilities used (``TRW`` only)
        messages: fixed-point messages keyed by variable-name pairs, used to
            warm start clamped children (``Bethe`` and ``TRW``)
    """
    log_z: float
    marginals: Any
    method: str
    bound: str
    converged: bool = True
    iters: int = 0
    wall_time: float = 0.0
    rho: Any = None
    messages: Optional[dict] = None

    def shifted(self, constant):
        '''Same result with ``constant`` added to the estimate
        '''
        return replace(self, log_z=self.log_z + constant)

    def singleton_entropies(self, model):
        '''Entropy of every singleton marginal keyed by variable name
        '''
        return {name: entropy(mu) for name, mu in zip(model.var_names, self.marginals.singles)}
