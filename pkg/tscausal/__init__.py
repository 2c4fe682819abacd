# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

from .causallib import CAUSAL_RESULT, CausalToolsException
from .criteria import ( backdoorAdmissible, findAdmissibleSets, frontdoorAdmissible,
                        grangerNoncausal, noncausalAllHorizons )
from .graph import MixedGraph, Node, ancestors
from .separation import mSeparated
