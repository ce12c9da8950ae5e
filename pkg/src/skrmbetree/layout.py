"""Placement of tree nodes and the value arena onto the device.

Two mappings:

word mapping
    One track per node. Pair slot s owns two word slots: 2s holds the key,
    2s+1 the payload. A track therefore carries 2 * node_pairs ports.

bit_interleaved mapping
    Nodes share groups of 2 * word_bits tracks that shift in lockstep. Key
    bit b lives on row b, payload bit b on row word_bits + b. A node is one
    column offset inside every interport region, so a group holds
    ports_per_track * interport_bits nodes and pair slot s sits under port
    s. Detecting or flipping a whole word is a per-port pulse across rows,
    which is where port parallelism pays.

Groups never mix node kinds: internal nodes, leaves and arena rows shift on
different groups so a hot buffer never drags leaf tracks around.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .errors import CapacityError, ConfigError, StructureError

KIND_INTERNAL = "internal"
KIND_LEAF = "leaf"
KIND_ARENA = "arena"


def _check_track_budget(device, max_tracks, need: int = 1) -> None:
    if max_tracks is None:
        return
    used = len(device.tracks) + sum(g.n_tracks for g in device.groups.values())
    if used + need > max_tracks:
        raise CapacityError(
            f"track budget {max_tracks} exhausted ({used} in use, {need} more needed)")


class WordBasedLayout:
    mapping = "word"

    def __init__(self, device, max_tracks=None):
        self.device = device
        self.max_tracks = max_tracks
        self.assignments: dict[int, int] = {}   # node_id -> track_id
        self.kinds: dict[int, str] = {}

    def place_node(self, node_id: int, kind: str):
        if node_id in self.assignments:
            raise ConfigError(f"node {node_id} already placed")
        _check_track_budget(self.device, self.max_tracks)
        tr = self.device.new_track()
        self.assignments[node_id] = tr.track_id
        self.kinds[node_id] = kind
        return tr

    def track_of(self, node_id: int):
        return self.device.track(self.assignments[node_id])

    def key_slot(self, pair_slot: int) -> int:
        return 2 * pair_slot

    def payload_slot(self, pair_slot: int) -> int:
        return 2 * pair_slot + 1

    def to_json(self) -> dict:
        return {"mapping": self.mapping,
                "nodes": {str(n): {"track": t, "kind": self.kinds[n]}
                          for n, t in sorted(self.assignments.items())}}


class BitInterleavedLayout:
    mapping = "bit_interleaved"

    def __init__(self, device, word_bits: int, max_tracks=None):
        self.device = device
        self.word_bits = word_bits
        self.max_tracks = max_tracks
        # pair slot s sits under port s, so one column offset holds a whole
        # node and a group packs interport_bits of them
        self.nodes_per_group = device.geom.interport_bits
        self.assignments: dict[int, tuple[int, int, str]] = {}
        self._pools: dict[str, tuple[int, int]] = {}  # kind -> (group_id, fill)

    def place_node(self, node_id: int, kind: str):
        if node_id in self.assignments:
            raise ConfigError(f"node {node_id} already placed")
        pool = self._pools.get(kind)
        if pool is None or pool[1] >= self.nodes_per_group:
            rows = 2 * self.word_bits
            _check_track_budget(self.device, self.max_tracks, rows)
            g = self.device.new_group(rows)
            pool = (g.group_id, 0)
        group_id, fill = pool
        self._pools[kind] = (group_id, fill + 1)
        self.assignments[node_id] = (group_id, fill, kind)
        return self.device.groups[group_id], fill

    def locate(self, node_id: int):
        group_id, offset, _kind = self.assignments[node_id]
        return self.device.groups[group_id], offset

    def to_json(self) -> dict:
        return {"mapping": self.mapping,
                "nodes": {str(n): {"group": g, "offset": o, "kind": k}
                          for n, (g, o, k) in sorted(self.assignments.items())}}


class _WordArenaMap:
    """Arena slots on the word mapping: plain tracks, one value per word
    slot, filled in index order."""

    def __init__(self, device, max_tracks=None):
        self.device = device
        self.max_tracks = max_tracks
        self.track_ids: list[int] = []
        self.slots_per_track = device.geom.ports_per_track

    def locate(self, index: int):
        t, slot = divmod(index, self.slots_per_track)
        while t >= len(self.track_ids):
            _check_track_budget(self.device, self.max_tracks)
            self.track_ids.append(self.device.new_track().track_id)
        return self.device.track(self.track_ids[t]), slot

    def to_json(self) -> dict:
        return {"tracks": list(self.track_ids),
                "slots_per_track": self.slots_per_track}


class _BiArenaMap:
    """Arena slots on the bit-interleaved mapping: word_bits-row groups, one
    value per (port, column) cell."""

    def __init__(self, device, word_bits: int, max_tracks=None):
        self.device = device
        self.word_bits = word_bits
        self.max_tracks = max_tracks
        geom = device.geom
        self.slots_per_group = geom.ports_per_track * geom.interport_bits
        self.group_ids: list[int] = []

    def locate(self, index: int):
        g, r = divmod(index, self.slots_per_group)
        while g >= len(self.group_ids):
            _check_track_budget(self.device, self.max_tracks, self.word_bits)
            self.group_ids.append(self.device.new_group(self.word_bits).group_id)
        interport = self.device.geom.interport_bits
        port, offset = divmod(r, interport)
        return self.device.groups[self.group_ids[g]], port, offset

    def to_json(self) -> dict:
        return {"groups": list(self.group_ids),
                "slots_per_group": self.slots_per_group}


@dataclass(frozen=True)
class PlanStep:
    """One homogeneous group in an access schedule: `count` primitive
    instances taking `steps` latency steps."""
    op: str
    count: int
    steps: int


def plan_cost(plan, model) -> tuple[float, float]:
    energy = 0.0
    latency = 0.0
    for step in plan:
        kind = "shift" if step.op == "shift" else step.op
        energy += step.count * model.energy(kind)
        latency += step.steps * model.latency(kind)
    return energy, latency


class DeviceStore:
    """Charged access path between the tree and the device.

    Owns placement, translates pair-slot reads/writes into passes under the
    configured strategy, and asserts that what the cells hold matches what
    the caller expects (a mismatch means the simulation lost data).
    """

    has_device = True

    def __init__(self, device, mapping: str, tree_cfg, word_bits: int):
        self.device = device
        self.mapping = mapping
        self.cfg = tree_cfg
        self.word_bits = word_bits
        self.parallel = tree_cfg.parallel_ports
        self.strategy = tree_cfg.strategy
        if mapping == "word":
            self.layout = WordBasedLayout(device, tree_cfg.max_tracks)
            self.arena_map = _WordArenaMap(device, tree_cfg.max_tracks)
        elif mapping == "bit_interleaved":
            self.layout = BitInterleavedLayout(device, word_bits,
                                               tree_cfg.max_tracks)
            self.arena_map = _BiArenaMap(device, word_bits, tree_cfg.max_tracks)
        else:
            raise ConfigError(f"unknown mapping {mapping!r}")

    # ------------------------------------------------------------- placement

    def add_node(self, node_id: int, kind: str) -> None:
        self.layout.place_node(node_id, kind)

    def allocation_json(self) -> dict:
        out = self.layout.to_json()
        out["arena"] = self.arena_map.to_json()
        return out

    # ----------------------------------------------------------------- reads

    def _checked(self, got: int, expect, what: str) -> int:
        if expect is not None and got != expect:
            raise StructureError(
                f"{what}: device holds {got:#x}, tree expected {expect:#x}")
        return got

    def read_key(self, node_id: int, pair_slot: int, expect=None) -> int:
        if self.mapping == "word":
            tr = self.layout.track_of(node_id)
            got = self.device.read_word(tr, self.layout.key_slot(pair_slot),
                                        self.word_bits)
        else:
            group, offset = self.layout.locate(node_id)
            self.device.group_align(group, offset)
            got = self.device.bi_read_word(group, pair_slot, offset, 0,
                                           self.word_bits)
        return self._checked(got, expect, f"node {node_id} slot {pair_slot} key")

    def read_payload(self, node_id: int, pair_slot: int, width: int,
                     expect=None) -> int:
        if self.mapping == "word":
            tr = self.layout.track_of(node_id)
            got = self.device.read_word(tr, self.layout.payload_slot(pair_slot),
                                        width)
        else:
            group, offset = self.layout.locate(node_id)
            self.device.group_align(group, offset)
            got = self.device.bi_read_word(group, pair_slot, offset,
                                           self.word_bits, width)
        return self._checked(got, expect,
                             f"node {node_id} slot {pair_slot} payload")

    # ---------------------------------------------------------------- writes

    def write_pairs(self, node_id: int, writes) -> None:
        """writes: list of (pair_slot, key, payload, payload_width); key or
        payload may be None to leave that word untouched."""
        if not writes:
            return
        if self.mapping == "word":
            self._write_pairs_word(node_id, writes)
        else:
            self._write_pairs_bi(node_id, writes)

    def _write_pairs_word(self, node_id, writes):
        from .strategies import apply_strategy
        tr = self.layout.track_of(node_id)
        word_writes = []
        for pair_slot, key, payload, pwidth in writes:
            if key is not None:
                word_writes.append((self.layout.key_slot(pair_slot),
                                    kernels.int_to_bits(key, self.word_bits),
                                    self.word_bits))
            if payload is not None:
                word_writes.append((self.layout.payload_slot(pair_slot),
                                    kernels.int_to_bits(payload, pwidth),
                                    pwidth))
        apply_strategy(self.device, tr, word_writes, self.strategy,
                       self.parallel)

    def _write_pairs_bi(self, node_id, writes):
        group, offset = self.layout.locate(node_id)
        self.device.group_align(group, offset)
        # naive clears the whole row span; compare strategies flip in place
        mode = "naive" if self.strategy == "naive" else "dcw"
        wb = self.word_bits
        for pair_slot, key, payload, pwidth in writes:
            if key is not None:
                self.device.bi_write_word(group, pair_slot, offset, 0, wb, wb,
                                          kernels.int_to_bits(key, wb), mode,
                                          self.parallel)
            if payload is not None:
                self.device.bi_write_word(group, pair_slot, offset, wb, wb,
                                          pwidth,
                                          kernels.int_to_bits(payload, pwidth),
                                          mode, self.parallel)

    # ----------------------------------------------------------------- arena

    def arena_write(self, index: int, value: int, width: int) -> None:
        # values are spilled once per upsert; compare-write keeps that cheap
        bits = kernels.int_to_bits(value, width)
        if self.mapping == "word":
            tr, slot = self.arena_map.locate(index)
            self.device.write_serial(tr, slot, bits, width, "dcw")
        else:
            group, port, offset = self.arena_map.locate(index)
            self.device.group_align(group, offset)
            self.device.bi_write_word(group, port, offset, 0, self.word_bits,
                                      width, bits, "dcw", self.parallel)

    def arena_read(self, index: int, width: int, expect=None) -> int:
        if self.mapping == "word":
            tr, slot = self.arena_map.locate(index)
            got = self.device.read_word(tr, slot, width)
        else:
            group, port, offset = self.arena_map.locate(index)
            self.device.group_align(group, offset)
            got = self.device.bi_read_word(group, port, offset, 0, width)
        return self._checked(got, expect, f"arena slot {index}")

    # ------------------------------------------------- uncharged verification

    def peek_pair(self, node_id: int, pair_slot: int,
                  payload_width: int) -> tuple[int, int]:
        if self.mapping == "word":
            tr = self.layout.track_of(node_id)
            ks = tr.slot_start(self.layout.key_slot(pair_slot))
            ps = tr.slot_start(self.layout.payload_slot(pair_slot))
            key = kernels.bits_to_int(tr.cells[ks:ks + self.word_bits])
            payload = kernels.bits_to_int(tr.cells[ps:ps + payload_width])
        else:
            # cells never move in the array; a node's column for port p is
            # the fixed index slot_start(p) + offset whatever the alignment
            group, offset = self.layout.locate(node_id)
            col = group.slot_start(pair_slot) + offset
            wb = self.word_bits
            key = kernels.bits_to_int(group.cells[0:wb, col])
            payload = kernels.bits_to_int(
                group.cells[wb:wb + payload_width, col])
        return key, payload

    def peek_arena(self, index: int, width: int) -> int:
        if self.mapping == "word":
            tr, slot = self.arena_map.locate(index)
            start = tr.slot_start(slot)
            return kernels.bits_to_int(tr.cells[start:start + width])
        group, port, offset = self.arena_map.locate(index)
        col = group.slot_start(port) + offset
        return kernels.bits_to_int(group.cells[0:width, col])

    # ------------------------------------------------------------------ plans

    def plan_node_access(self, node_id: int, access_kind: str,
                         pair_slots=(), payload_width=None):
        """Schedule for touching `pair_slots` of one node, assuming the node
        is already aligned under its ports (alignment slack is state
        dependent and excluded). Write counts are worst case: content
        decides how many flips actually fire.
        """
        if access_kind not in ("read", "write"):
            raise ConfigError("access_kind must be 'read' or 'write'")
        slots = list(pair_slots)
        if not slots:
            return []
        wb = self.word_bits
        pw = payload_width if payload_width is not None else wb
        words = len(slots) * 2
        bits_per = wb + pw
        plan: list[PlanStep] = []
        if access_kind == "read":
            if self.mapping == "word":
                for _ in slots:
                    plan.append(PlanStep("shift", wb - 1, wb - 1))
                    plan.append(PlanStep("detect", wb, wb))
                    plan.append(PlanStep("shift", pw - 1, pw - 1))
                    plan.append(PlanStep("detect", pw, pw))
            else:
                # row heads share the column: one simultaneous fire per word
                for _ in slots:
                    plan.append(PlanStep("detect", wb, 1))
                    plan.append(PlanStep("detect", pw, 1))
            return plan
        if self.mapping == "word":
            span = self.device.geom.interport_bits
            if self.parallel:
                plan.append(PlanStep("shift", 2 * span, 2 * span))
                plan.append(PlanStep("detect", len(slots) * bits_per, wb))
                plan.append(PlanStep("inject", len(slots) * bits_per, wb))
            else:
                for _ in range(words):
                    plan.append(PlanStep("shift", 2 * span, 2 * span))
                if self.strategy == "naive":
                    plan.append(PlanStep("remove", len(slots) * bits_per,
                                         len(slots) * bits_per))
                    plan.append(PlanStep("inject", len(slots) * bits_per,
                                         len(slots) * bits_per))
                else:
                    plan.append(PlanStep("detect", len(slots) * bits_per,
                                         len(slots) * bits_per))
                    plan.append(PlanStep("inject", len(slots) * bits_per,
                                         len(slots) * bits_per))
        else:
            # compare pass (or the naive clear pulse) is dataless and fires
            # the whole span at once; patterned injects need the parallel
            # drivers to collapse into one step
            first = "remove" if self.strategy == "naive" else "detect"
            for _ in slots:
                for width in (wb, pw):
                    plan.append(PlanStep(first, wb, 1))
                    plan.append(PlanStep("inject", width,
                                         1 if self.parallel else width))
        return plan


class NullStore:
    """Logical-only stand-in: same surface as DeviceStore, no device, no
    cost. Used for pure structure work such as write-count experiments."""

    has_device = False

    def add_node(self, node_id, kind):
        pass

    def write_pairs(self, node_id, writes):
        pass

    def read_key(self, node_id, pair_slot, expect=None):
        return expect

    def read_payload(self, node_id, pair_slot, width, expect=None):
        return expect

    def arena_write(self, index, value, width):
        pass

    def arena_read(self, index, width, expect=None):
        return expect

    def allocation_json(self):
        return {"mapping": None, "nodes": {}, "arena": {}}
