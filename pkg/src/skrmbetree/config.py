"""Run configuration: unit costs, track geometry, tree shape, experiment knobs.

Everything here can be set from code, from CLI flags, or from a plain
``key = value`` text file whose keys mirror the dataclass field names
(see :func:`read_config_file`).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

PRIMITIVES = ("detect", "shift", "remove", "inject")

MAPPINGS = ("word", "bit_interleaved")
STRATEGIES = ("naive", "dcw", "pw", "bcw")
SHIFT_POLICIES = ("lazy", "eager")


@dataclass(frozen=True)
class CostModel:
    """Per-primitive unit costs.

    Defaults are the usual skyrmion racetrack figures: detect 2 fJ / 0.1 ns,
    shift 20 fJ / 0.5 ns, remove 20 fJ / 0.8 ns, inject 200 fJ / 1.0 ns.
    Energy is charged per primitive instance; latency per (possibly parallel)
    step, so a step that fires many ports at once still costs one unit.
    """

    energy_detect: float = 2.0
    energy_shift: float = 20.0
    energy_remove: float = 20.0
    energy_inject: float = 200.0
    latency_detect: float = 0.1
    latency_shift: float = 0.5
    latency_remove: float = 0.8
    latency_inject: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"{f.name} must be positive")

    def energy(self, kind: str) -> float:
        return getattr(self, "energy_" + kind)

    def latency(self, kind: str) -> float:
        return getattr(self, "latency_" + kind)

    def dominant(self, kinds) -> str:
        """Kind with the largest unit latency; a mixed parallel step bills as it."""
        return max(kinds, key=self.latency)


@dataclass(frozen=True)
class Geometry:
    """Physical shape of one track family.

    A track has ``ports_per_track`` access ports spaced ``interport_bits``
    cells apart, so the data region holds ports_per_track * interport_bits
    cells, plus one interport-sized overflow region at each end so a full
    write pass can shift out without losing skyrmions.
    """

    word_bits: int = 64
    interport_bits: int = 64
    ports_per_track: int = 32
    shift_policy: str = "lazy"

    def __post_init__(self):
        if self.word_bits < 1:
            raise ConfigError("word_bits must be >= 1")
        if self.interport_bits < self.word_bits:
            raise ConfigError("interport_bits must be >= word_bits")
        if self.ports_per_track < 1:
            raise ConfigError("ports_per_track must be >= 1")
        if self.shift_policy not in SHIFT_POLICIES:
            raise ConfigError(f"shift_policy must be one of {SHIFT_POLICIES}")

    @property
    def data_bits(self) -> int:
        return self.ports_per_track * self.interport_bits

    @property
    def total_cells(self) -> int:
        # data region plus the two overflow regions
        return (self.ports_per_track + 2) * self.interport_bits


@dataclass(frozen=True)
class TreeConfig:
    """Shape and feature toggles for the message-buffer tree."""

    node_pairs: int = 16        # key-value slots per node (B)
    pivot_pairs: int = 4        # pivot slots in an internal node
    buffer_pairs: int = 12      # message slots in an internal node
    element_pairs: int = 16     # element slots in a leaf
    encoding: bool = False      # buffer payloads hold arena indices, not values
    parallel_ports: bool = False
    strategy: str = "naive"
    count_new_detect: bool = False
    arena_capacity: int | None = None   # None: sized from the planned upsert count
    max_tracks: int | None = None       # None: unbounded pool

    def __post_init__(self):
        if self.pivot_pairs < 2:
            raise ConfigError("pivot_pairs must be >= 2")
        if self.buffer_pairs < 1 or self.element_pairs < 1:
            raise ConfigError("buffer and element capacities must be >= 1")
        if self.pivot_pairs + self.buffer_pairs != self.node_pairs:
            raise ConfigError("pivot_pairs + buffer_pairs must equal node_pairs")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.parallel_ports and self.strategy != "bcw":
            raise ConfigError("parallel port updates run the batched compare "
                              "write; parallel_ports requires strategy=bcw")
        if self.arena_capacity is not None and self.arena_capacity < 1:
            raise ConfigError("arena_capacity must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: a workload replayed against one tree configuration."""

    workload: str = "a"
    mapping: str = "word"
    entries: int = 10_000
    op_count: int | None = None     # None: same as entries
    word_bytes: int = 8
    seed: int = 42
    tree: TreeConfig = TreeConfig()
    cost: CostModel = CostModel()
    shift_policy: str = "lazy"

    def __post_init__(self):
        if self.mapping not in MAPPINGS:
            raise ConfigError(f"mapping must be one of {MAPPINGS}")
        if self.word_bytes < 1:
            raise ConfigError("word_bytes must be >= 1")
        if self.entries < 1:
            raise ConfigError("entries must be >= 1")
        if self.tree.strategy == "pw" and self.mapping == "bit_interleaved":
            raise ConfigError("pw is a single-word word-based strategy; "
                              "it cannot drive the bit_interleaved mapping")

    @property
    def word_bits(self) -> int:
        return self.word_bytes * 8

    @property
    def ops(self) -> int:
        return self.entries if self.op_count is None else self.op_count

    def geometry(self) -> Geometry:
        """Track geometry implied by this run.

        Word-based tracks hold one node each: two word slots per pair.
        Bit-interleaved tracks hold one bit column of many nodes: one port
        per pair slot.
        """
        ports = (2 * self.tree.node_pairs if self.mapping == "word"
                 else self.tree.node_pairs)
        return Geometry(word_bits=self.word_bits,
                        interport_bits=self.word_bits,
                        ports_per_track=ports,
                        shift_policy=self.shift_policy)

    def baseline(self) -> "ExperimentConfig":
        """The naive reference configuration on the same mapping."""
        return replace(self, tree=replace(self.tree, strategy="naive",
                                          encoding=False, parallel_ports=False))

    def is_baseline(self) -> bool:
        t = self.tree
        return t.strategy == "naive" and not t.encoding and not t.parallel_ports


_BOOL_WORDS = {"1": True, "true": True, "on": True, "yes": True,
               "0": False, "false": False, "off": False, "no": False}


def _coerce(text: str):
    t = text.strip()
    low = t.lower()
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def read_config_file(path) -> dict:
    """Parse a plain ``key = value`` file into a {key: value} dict.

    Blank lines and ``#`` comments are skipped. Values are coerced to
    bool/int/float when they look like one.
    """
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read settings file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = _coerce(value)
    return out


_COST_KEYS = [f.name for f in fields(CostModel)]
_GEOM_KEYS = ("word_bits", "ports_per_track", "interport_bits", "shift_policy")
_TREE_KEYS = [f.name for f in fields(TreeConfig)]
_EXP_KEYS = ("workload", "mapping", "entries", "op_count", "word_bytes", "seed")


def apply_file_settings(cfg: ExperimentConfig, settings: dict) -> ExperimentConfig:
    """Overlay a parsed config file onto an ExperimentConfig.

    Geometry keys (word_bits, ...) adjust the experiment-level fields they
    derive from; unknown keys raise, so typos do not pass silently.
    """
    cost_kw, tree_kw, exp_kw = {}, {}, {}
    for key, value in settings.items():
        if key in _COST_KEYS:
            cost_kw[key] = float(value)
        elif key in _TREE_KEYS:
            tree_kw[key] = value
        elif key in _EXP_KEYS:
            exp_kw[key] = value
        elif key == "word_bits":
            if value % 8:
                raise ConfigError("word_bits from file must be a multiple of 8")
            exp_kw["word_bytes"] = int(value) // 8
        elif key == "shift_policy":
            exp_kw["shift_policy"] = value
        elif key in ("ports_per_track", "interport_bits"):
            # geometry is derived from the tree shape; these are accepted for
            # standalone device work but must agree with the derived values
            continue
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if cost_kw:
        cfg = replace(cfg, cost=replace(cfg.cost, **cost_kw))
    if tree_kw:
        cfg = replace(cfg, tree=replace(cfg.tree, **tree_kw))
    if exp_kw:
        cfg = replace(cfg, **exp_kw)
    return cfg


def geometry_from_settings(settings: dict) -> Geometry:
    """Build a standalone Geometry from config-file keys (device-level use)."""
    kw = {}
    for key in _GEOM_KEYS:
        if key in settings:
            kw[key] = settings[key]
    if "word_bits" in kw and "interport_bits" not in kw:
        kw["interport_bits"] = kw["word_bits"]
    return Geometry(**kw)


def cost_model_from_settings(settings: dict) -> CostModel:
    kw = {k: float(v) for k, v in settings.items() if k in _COST_KEYS}
    return CostModel(**kw)
