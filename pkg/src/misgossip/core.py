"""Network state and the packet merge rule for timely gossip with mutation.

Nodes are indexed ``0..n-1`` throughout the package; node ``0`` plays the
role of the tagged node whose version age is reported as ``x1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence


@dataclass(frozen=True)
class NetworkParams:
    """The five model parameters.

    ``lambda_e`` is the source self-update rate, ``lambda_s`` the total rate
    at which the source pushes to the network, ``lam`` the total gossip rate
    of each node and ``p`` the chance that a node-to-node transmission
    delivers a mutated packet.
    """

    n: int
    lambda_e: float
    lambda_s: float
    lam: float
    p: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("lambda_e", "lambda_s", "lam", "p"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite nonnegative number, got {value!r}")
            object.__setattr__(self, name, value)
        if self.p > 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if self.lambda_e == 0 and self.lambda_s == 0 and self.lam == 0:
            raise ValueError("at least one of lambda_e, lambda_s, lam must be positive")

    @property
    def source_link_rate(self) -> float:
        """Rate of source deliveries to one specific node."""
        return self.lambda_s / self.n

    @property
    def pair_rate(self) -> float:
        """Gossip rate on one ordered pair of nodes; zero for a single node."""
        return self.lam / (self.n - 1) if self.n > 1 else 0.0

    @property
    def gossip_rate(self) -> float:
        """Aggregate gossip rate of the whole network."""
        return self.n * self.lam if self.n > 1 else 0.0

    @property
    def total_rate(self) -> float:
        return self.lambda_e + self.lambda_s + self.gossip_rate

    def with_value(self, name: str, value: float) -> "NetworkParams":
        """Copy with one parameter replaced (``lambda`` is accepted for ``lam``)."""
        field = PARAM_ALIASES.get(name, name)
        if field not in PARAM_FIELDS:
            raise ValueError(f"unknown parameter {name!r}")
        return replace(self, **{field: value})

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lambda_e": self.lambda_e,
            "lambda_s": self.lambda_s,
            "lambda": self.lam,
            "p": self.p,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkParams":
        kwargs = {PARAM_ALIASES.get(k, k): v for k, v in data.items()}
        unknown = set(kwargs) - set(PARAM_FIELDS)
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**kwargs)


PARAM_FIELDS = ("n", "lambda_e", "lambda_s", "lam", "p")
PARAM_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class NodeState:
    version_age: int = 0
    truth: bool = True

    def __post_init__(self) -> None:
        if self.version_age < 0:
            raise ValueError("version_age must be nonnegative")


@dataclass(frozen=True)
class NetworkState:
    """Ages and truth flags of all user nodes.

    The source itself is implicit: it always holds the truth at age 0.
    ``source_version`` only counts self-updates for logging.
    """

    nodes: tuple[NodeState, ...]
    source_version: int = 0

    @classmethod
    def initial(cls, n: int) -> "NetworkState":
        """All nodes fresh and truthful."""
        return cls(tuple(NodeState() for _ in range(n)))

    @classmethod
    def from_lists(cls, ages: Sequence[int], truths: Sequence[int | bool],
                   source_version: int = 0) -> "NetworkState":
        if len(ages) != len(truths):
            raise ValueError("ages and truths must have the same length")
        return cls(tuple(NodeState(int(a), bool(t)) for a, t in zip(ages, truths)),
                   source_version)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def ages(self) -> list[int]:
        return [node.version_age for node in self.nodes]

    @property
    def truths(self) -> list[int]:
        return [int(node.truth) for node in self.nodes]

    def _check_index(self, j: int) -> None:
        if not 0 <= j < self.n:
            raise IndexError(f"node index {j} out of range for n={self.n}")

    def _with_node(self, j: int, node: NodeState) -> "NetworkState":
        nodes = list(self.nodes)
        nodes[j] = node
        return NetworkState(tuple(nodes), self.source_version)


def apply_source_update(state: NetworkState) -> NetworkState:
    """The source moves to a new version; every stored packet ages by one."""
    return NetworkState(
        tuple(NodeState(node.version_age + 1, node.truth) for node in state.nodes),
        state.source_version + 1,
    )


def apply_source_delivery(state: NetworkState, j: int) -> NetworkState:
    """The source hands node ``j`` the current version, which is always the truth."""
    state._check_index(j)
    return state._with_node(j, NodeState(0, True))


def apply_gossip(state: NetworkState, i: int, j: int, honest: bool) -> NetworkState:
    """Node ``i`` sends its packet to node ``j``.

    A staler packet is rejected. A fresher one replaces the receiver's packet,
    arriving mutated (truth 0) when the sender is dishonest. At equal age the
    receiver keeps the truth if either side honestly holds it; a dishonest
    equal-age reception leaves the receiver untouched.
    """
    state._check_index(i)
    state._check_index(j)
    if i == j:
        raise ValueError("a node cannot gossip to itself")
    sender, receiver = state.nodes[i], state.nodes[j]
    if sender.version_age > receiver.version_age:
        return state
    if sender.version_age < receiver.version_age:
        return state._with_node(j, NodeState(sender.version_age, sender.truth and honest))
    if honest and sender.truth and not receiver.truth:
        return state._with_node(j, NodeState(receiver.version_age, True))
    return state


def truth_fraction(state: NetworkState) -> float:
    return sum(node.truth for node in state.nodes) / state.n


def min_age(state: NetworkState, nodes: Iterable[int]) -> float:
    """Smallest version age over ``nodes``; ``inf`` for an empty set."""
    return min((state.nodes[j].version_age for j in nodes), default=math.inf)


def measure_T_AB(state: NetworkState, A: Iterable[int], B: Iterable[int]) -> int:
    """Whether the freshest packet pooled from A's real packets and B's mutated
    copies can be the truth.

    Nodes in ``B`` contribute only their ages; their copies never carry the
    truth. Returns 1 when the freshest age in ``A`` is no larger than that in
    ``B`` and some freshest node of ``A`` holds the truth.
    """
    A, B = set(A), set(B)
    for j in A | B:
        state._check_index(j)
    if A & B:
        raise ValueError("A and B must be disjoint")
    x_a = min_age(state, A)
    if x_a > min_age(state, B) or math.isinf(x_a):
        return 0
    return int(any(state.nodes[j].truth for j in A if state.nodes[j].version_age == x_a))


def fresh_truth_indicator(state: NetworkState, A: Iterable[int]) -> int:
    """1 when some node of ``A`` holds the current version and it is the truth."""
    A = list(A)
    return int(measure_T_AB(state, A, ()) == 1 and min_age(state, A) == 0)
