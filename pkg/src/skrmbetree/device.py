"""Racetrack device model: cells, ports, primitives, and charged bulk passes.

A track is a line of bit cells with equally spaced access ports. Shifting
moves every skyrmion on the track; in code the cell array stays put and a
signed ``offset`` records the displacement, so cell content is addressed in
track-local coordinates that never move. The cell under port ``p`` at
offset ``o`` is index ``(p + 1) * interport - o``; word slot ``w`` owns the
cell range ``[(w + 1) * interport, (w + 2) * interport)``; bit ``j`` of
slot ``w`` passes under port ``w`` at offset ``-j``. One interport-sized
overflow region at each end absorbs a full write pass, so the boundary
condition is ``|offset| <= interport``.

All primitives and passes bump the device's OpCounters. Aggregated passes
charge identical totals to a primitive-by-primitive replay; the test suite
holds them to that.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .config import CostModel, Geometry
from .counters import OpCounters
from .errors import (AllocationError, BoundaryError, ConfigError,
                     DoubleInjectError, PortRangeError)

RIGHT = "right"
LEFT = "left"


class Racetrack:
    """One track: a 1-D cell array plus its current shift offset."""

    __slots__ = ("track_id", "cells", "offset", "interport", "n_ports")

    def __init__(self, track_id: int, n_ports: int, interport: int):
        self.track_id = track_id
        self.n_ports = n_ports
        self.interport = interport
        self.cells = np.zeros((n_ports + 2) * interport, dtype=np.uint8)
        self.offset = 0

    def slot_start(self, word_slot: int) -> int:
        return (word_slot + 1) * self.interport

    def port_cell(self, port: int) -> int:
        """Track-local index of the cell currently under `port`."""
        return (port + 1) * self.interport - self.offset

    def popcount(self) -> int:
        return int(self.cells.sum())


class TrackGroup:
    """A bundle of tracks shifted in lockstep (bit-interleaved mapping).

    Row r of the 2-D cell array is one track; every row shares the group
    offset, which is what lets one shift set align a whole node.
    """

    __slots__ = ("group_id", "cells", "offset", "interport", "n_ports", "n_tracks")

    def __init__(self, group_id: int, n_tracks: int, n_ports: int, interport: int):
        self.group_id = group_id
        self.n_tracks = n_tracks
        self.n_ports = n_ports
        self.interport = interport
        self.cells = np.zeros((n_tracks, (n_ports + 2) * interport), dtype=np.uint8)
        self.offset = 0

    def slot_start(self, port: int) -> int:
        return (port + 1) * self.interport

    def popcount(self) -> int:
        return int(self.cells.sum())


_MODES = {"naive": kernels.MODE_NAIVE, "dcw": kernels.MODE_DCW}


class Device:
    """Owns the track pool, the counters, and every charging rule."""

    def __init__(self, geometry: Geometry, cost: CostModel | None = None,
                 record_steps: bool = False, count_new_detect: bool = False):
        self.geom = geometry
        self.cost = cost if cost is not None else CostModel()
        self.counters = OpCounters(trace=[] if record_steps else None)
        self.count_new_detect = count_new_detect
        self.tracks: dict[int, Racetrack] = {}
        self.groups: dict[int, TrackGroup] = {}
        self._next_track = 0
        self._next_group = 0

    # ------------------------------------------------------------ allocation

    def new_track(self) -> Racetrack:
        tr = Racetrack(self._next_track, self.geom.ports_per_track,
                       self.geom.interport_bits)
        self.tracks[tr.track_id] = tr
        self._next_track += 1
        return tr

    def new_group(self, n_tracks: int) -> TrackGroup:
        g = TrackGroup(self._next_group, n_tracks, self.geom.ports_per_track,
                       self.geom.interport_bits)
        self.groups[g.group_id] = g
        self._next_group += 1
        return g

    def track(self, track_id: int) -> Racetrack:
        try:
            return self.tracks[track_id]
        except KeyError:
            raise AllocationError(f"unknown track {track_id}") from None

    def total_skyrmions(self) -> int:
        return (sum(t.popcount() for t in self.tracks.values())
                + sum(g.popcount() for g in self.groups.values()))

    # ------------------------------------------------------------ primitives

    def _resolve(self, tracks):
        if isinstance(tracks, (Racetrack, TrackGroup)):
            return [tracks]
        if isinstance(tracks, int):
            return [self.track(tracks)]
        return [t if isinstance(t, (Racetrack, TrackGroup)) else self.track(t)
                for t in tracks]

    def shift(self, tracks, direction: str, steps: int) -> None:
        """Shift a set of tracks together. Energy per track per step;
        latency one step per step (simultaneous movement). steps = 0 is a
        no-op."""
        if steps < 0:
            raise ConfigError("steps must be >= 0")
        if direction not in (LEFT, RIGHT):
            raise ConfigError("direction must be 'left' or 'right'")
        if steps == 0:
            return
        handles = self._resolve(tracks)
        delta = steps if direction == RIGHT else -steps
        limit = self.geom.interport_bits
        for h in handles:
            if abs(h.offset + delta) > limit:
                raise BoundaryError(
                    f"shift {direction} {steps} would move offset to "
                    f"{h.offset + delta}, past the overflow region ({limit})")
        width = 0
        for h in handles:
            h.offset += delta
            width += getattr(h, "n_tracks", 1)
        self.counters.record_shift(width, steps, lockstep=True)

    def _check_port(self, handle, port: int) -> None:
        if not (0 <= port < handle.n_ports):
            raise PortRangeError(f"port {port} outside 0..{handle.n_ports - 1}")

    def detect(self, track, port: int) -> int:
        """Read the bit under one port. Pure: no cell change."""
        tr = self._resolve(track)[0]
        self._check_port(tr, port)
        bit = int(tr.cells[tr.port_cell(port)])
        self.counters.record("detect", 1)
        return bit

    def inject(self, track, port: int) -> None:
        """Write a skyrmion (1) at the cell under the port."""
        tr = self._resolve(track)[0]
        self._check_port(tr, port)
        idx = tr.port_cell(port)
        if tr.cells[idx]:
            raise DoubleInjectError(f"cell under port {port} already holds a skyrmion")
        tr.cells[idx] = 1
        self.counters.record("inject", 1)

    def remove(self, track, port: int) -> None:
        """Destroy the skyrmion under the port; removing an empty cell is a
        free non-event (no count)."""
        tr = self._resolve(track)[0]
        self._check_port(tr, port)
        idx = tr.port_cell(port)
        if tr.cells[idx]:
            tr.cells[idx] = 0
            self.counters.record("remove", 1)

    def align(self, tracks, target_offset: int) -> int:
        """Minimal shifts to reach `target_offset` on every given track.

        All tracks must sit at one common offset already (they are a shift
        set). Returns the steps issued; 0 when already aligned.
        """
        handles = self._resolve(tracks)
        offsets = {h.offset for h in handles}
        if len(offsets) != 1:
            raise ConfigError("align needs tracks at a common offset")
        current = offsets.pop()
        delta = target_offset - current
        if delta == 0:
            return 0
        self.shift(handles, RIGHT if delta > 0 else LEFT, abs(delta))
        return abs(delta)

    def _finish(self, tracks) -> None:
        # eager policy restores the home position after every access
        if self.geom.shift_policy == "eager":
            self.align(tracks, 0)

    # ----------------------------------------------- word-based charged passes

    def _slot_array(self, tr: Racetrack, writes):
        starts = np.empty(len(writes), dtype=np.int64)
        widths = np.empty(len(writes), dtype=np.int64)
        seen = set()
        max_w = 0
        for i, (slot, _bits, width) in enumerate(writes):
            if not (0 <= slot < tr.n_ports):
                raise PortRangeError(f"word slot {slot} outside this track")
            if slot in seen:
                raise ConfigError(f"slot {slot} written twice in one batch")
            if not (0 <= width <= tr.interport):
                raise ConfigError("width must be within one interport segment")
            seen.add(slot)
            starts[i] = tr.slot_start(slot)
            widths[i] = width
            max_w = max(max_w, width)
        return starts, widths, max_w

    def _charge_pass_shifts(self, tr: Racetrack) -> None:
        """The out-and-back stream of a through-port write: align home, shift
        the word span out, write while shifting back. Exactly 2 * interport
        shift steps plus any lazy-alignment slack."""
        self.align(tr, 0)
        self.counters.record_shift(1, 2 * tr.interport)

    def write_serial(self, track, slot: int, bits: np.ndarray, width: int,
                     mode: str) -> None:
        """One word through its port, naive or dcw; every port action is its
        own latency step."""
        tr = self._resolve(track)[0]
        starts, widths, _ = self._slot_array(tr, [(slot, bits, width)])
        self._charge_pass_shifts(tr)
        det, inj, rem = kernels.word_write(tr.cells, int(starts[0]),
                                           tr.interport, width,
                                           np.ascontiguousarray(bits[:width]),
                                           _MODES[mode])
        if self.count_new_detect:
            det *= 2
        self.counters.record("detect", det)
        self.counters.record("inject", inj)
        self.counters.record("remove", rem)
        self._finish(tr)

    def write_pw(self, track, slot: int, bits: np.ndarray, width: int) -> None:
        """Permutation-style write: reuse surviving skyrmions, shifting each
        to its new cell; only the population difference is injected or
        removed. Single-word by construction."""
        tr = self._resolve(track)[0]
        starts, _, _ = self._slot_array(tr, [(slot, bits, width)])
        start = int(starts[0])
        old = tr.cells[start:start + width]
        new = np.ascontiguousarray(bits[:width])
        inj, rem, repos = kernels.pw_match(old, new)
        self.align(tr, 0)
        self.counters.record_shift(1, 2 * tr.interport + int(repos))
        self.counters.record("inject", int(inj))
        self.counters.record("remove", int(rem))
        tr.cells[start:start + width] = new
        self._finish(tr)

    def write_batch_bcw(self, track, writes) -> None:
        """Batched compare-write: one shared out-and-back pass; at every bit
        position all live slots detect in parallel (one step) and flip
        differing bits in parallel (one step billed at the slowest kind).

        writes: list of (word_slot, bits, width) on one track.
        """
        if not writes:
            return
        tr = self._resolve(track)[0]
        starts, widths, _ = self._slot_array(tr, writes)
        max_w = int(widths.max())
        mat = np.zeros((len(writes), max_w), dtype=np.uint8)
        for i, (_slot, bits, width) in enumerate(writes):
            mat[i, :width] = bits[:width]
        self._charge_pass_shifts(tr)
        if self.counters.trace is not None:
            self._bcw_traced(tr, starts, widths, mat)
        else:
            det, inj, rem, act, inj_only, rem_only, both = kernels.bcw_batch(
                tr.cells, starts, widths, mat)
            if self.count_new_detect:
                det *= 2
            c = self.counters
            c.detect += int(det)
            c.detect_steps += int(act)
            c.inject += int(inj)
            c.remove += int(rem)
            dom_both = self.cost.dominant(("inject", "remove"))
            inj_steps = int(inj_only) + (int(both) if dom_both == "inject" else 0)
            rem_steps = int(rem_only) + (int(both) if dom_both == "remove" else 0)
            c.inject_steps += inj_steps
            c.remove_steps += rem_steps
        self._finish(tr)

    def _bcw_traced(self, tr, starts, widths, mat):
        # slow reference path used when a step trace is requested; must
        # charge exactly what the kernel path charges
        max_w = mat.shape[1]
        for i in range(max_w):
            live = [s for s in range(len(starts)) if widths[s] > i]
            if not live:
                continue
            n_det = len(live) * (2 if self.count_new_detect else 1)
            self.counters.record("detect", n_det, parallel=True)
            inj = rem = 0
            for s in live:
                idx = int(starts[s]) + i
                old = int(tr.cells[idx])
                new = int(mat[s, i])
                if old != new:
                    if new:
                        inj += 1
                    else:
                        rem += 1
                    tr.cells[idx] = new
            self.counters.record_mixed(self.cost, inject=inj, remove=rem,
                                       parallel=True)

    def read_word(self, track, slot: int, width: int) -> int:
        """Stream one word's bits through its port, detecting each.

        The sweep starts from whichever end of the bit range is closer to
        the current offset, so back-to-back reads ping-pong instead of
        paying a realign pass. Lazy policy leaves the track where the sweep
        ends.
        """
        if width == 0:
            return 0
        tr = self._resolve(track)[0]
        if not (0 <= slot < tr.n_ports):
            raise PortRangeError(f"word slot {slot} outside this track")
        lo, hi = -(width - 1), 0
        near = hi if abs(tr.offset - hi) <= abs(tr.offset - lo) else lo
        far = lo if near == hi else hi
        self.align(tr, near)
        if width > 1:
            self.shift(tr, RIGHT if far > near else LEFT, width - 1)
        self.counters.record("detect", width)
        start = tr.slot_start(slot)
        value = kernels.bits_to_int(tr.cells[start:start + width])
        self._finish(tr)
        return value

    # -------------------------------------------- bit-interleaved charged ops

    def group_align(self, group: TrackGroup, node_offset: int) -> int:
        """Bring a node column under the ports; the whole group moves as one
        shift set."""
        if not (0 <= node_offset < group.interport):
            raise ConfigError("node offset outside the interport region")
        return self.align(group, -node_offset)

    def _column(self, group: TrackGroup, port: int, node_offset: int) -> int:
        self._check_port(group, port)
        if group.offset != -node_offset:
            raise ConfigError("group not aligned to the requested node offset")
        return group.slot_start(port) + node_offset

    def bi_read_word(self, group: TrackGroup, port: int, node_offset: int,
                     row_start: int, width: int) -> int:
        """Read one word stored one-bit-per-track at an aligned column.

        Every row head sits over the same column, so sensing is a single
        simultaneous fire regardless of how writes are driven.
        """
        if width == 0:
            return 0
        col = self._column(group, port, node_offset)
        self.counters.record("detect", width, parallel=True)
        value = kernels.bits_to_int(group.cells[row_start:row_start + width, col])
        return value

    def bi_write_word(self, group: TrackGroup, port: int, node_offset: int,
                      row_start: int, span: int, width: int, bits: np.ndarray,
                      mode: str, parallel: bool) -> None:
        """Write one word across tracks at an aligned column, naive or
        compare-and-flip.

        Sensing (the compare pass) and the unconditional clear pulse of a
        naive write carry no per-row data, so they fire all rows in one
        step. Patterned pulses that drive each row from its own data bit
        need the parallel write drivers: one step with them, one step per
        landed instance without.
        """
        col = self._column(group, port, node_offset)
        det, inj, rem = kernels.bi_write(group.cells, row_start, span, width,
                                         col, np.ascontiguousarray(bits[:width]),
                                         _MODES[mode])
        if self.count_new_detect:
            det *= 2
        self.counters.record("detect", int(det), parallel=True)
        if mode == "naive":
            # clear-all fires before inject-all: two pulses, never one
            self.counters.record("remove", int(rem), parallel=True)
            self.counters.record("inject", int(inj), parallel=parallel)
        else:
            # flips are sequenced as a remove phase then an inject phase;
            # the two pulse polarities never share a fire
            self.counters.record("remove", int(rem), parallel=parallel)
            self.counters.record("inject", int(inj), parallel=parallel)

    def counters_json(self) -> dict:
        return self.counters.as_flat_dict(self.cost)
