"""Extent-based file table with per-application access control, plus the
address map that virtualizes an array of SSDs into one block space.

The file table is control-plane state: files and ACLs are set up before a
measured run, and the storage controller consults them on every command.
Extents of distinct files never overlap, so any block resolves to at most
one file.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

__all__ = [
    "ExtentOverlap",
    "UnknownFile",
    "OutOfSpace",
    "Extent",
    "FileTable",
    "VirtualMap",
]


class ExtentOverlap(ValueError):
    """A requested extent collides with an allocated one."""


class UnknownFile(KeyError):
    """An operation referenced a file that does not exist."""


class OutOfSpace(RuntimeError):
    """No free extent run large enough for the allocation."""


@dataclass(frozen=True)
class Extent:
    start_block: int
    block_count: int

    @property
    def end_block(self) -> int:
        return self.start_block + self.block_count


@dataclass
class FileTable:
    """Files as disjoint extent lists plus an (app, file) -> permissions map."""

    block_size: int
    total_blocks: int
    files: dict[str, list[Extent]] = field(default_factory=dict)
    acl: dict[tuple[str, str], frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.block_size < 1 or self.total_blocks < 1:
            raise ValueError("block_size and total_blocks must be >= 1")
        self._rebuild_index()

    def _rebuild_index(self) -> None:
        # sorted (start, end, file) over all extents, for point lookups
        spans = sorted(
            (e.start_block, e.end_block, name)
            for name, extents in self.files.items()
            for e in extents
        )
        self._starts = [s for s, _, _ in spans]
        self._spans = spans

    def _free_runs(self) -> list[tuple[int, int]]:
        runs = []
        cursor = 0
        for start, end, _ in self._spans:
            if start > cursor:
                runs.append((cursor, start))
            cursor = max(cursor, end)
        if cursor < self.total_blocks:
            runs.append((cursor, self.total_blocks))
        return runs

    def create_file(self, name: str, size_bytes: int) -> list[Extent]:
        """Allocate first-fit extents summing to the requested size."""
        if name in self.files:
            raise ExtentOverlap(f"file {name!r} already exists")
        if size_bytes < 1:
            raise ValueError("file size must be >= 1 byte")
        needed = -(-size_bytes // self.block_size)
        extents: list[Extent] = []
        for start, end in self._free_runs():
            take = min(needed, end - start)
            if take > 0:
                extents.append(Extent(start, take))
                needed -= take
            if needed == 0:
                break
        if needed:
            raise OutOfSpace(f"need {needed} more blocks for {name!r}")
        self.files[name] = extents
        self._rebuild_index()
        return extents

    def add_extent(self, name: str, start_block: int, block_count: int) -> None:
        """Place an explicit extent; refuses any overlap with allocated space."""
        if block_count < 1 or start_block < 0 or start_block + block_count > self.total_blocks:
            raise ValueError("extent out of range")
        for s, e, owner in self._spans:
            if start_block < e and s < start_block + block_count:
                raise ExtentOverlap(f"extent overlaps {owner!r} at block {max(s, start_block)}")
        self.files.setdefault(name, []).append(Extent(start_block, block_count))
        self._rebuild_index()

    def delete_file(self, name: str) -> None:
        if name not in self.files:
            raise UnknownFile(name)
        del self.files[name]
        self.acl = {k: v for k, v in self.acl.items() if k[1] != name}
        self._rebuild_index()

    def set_acl(self, app: str, name: str, perms: str | frozenset[str]) -> None:
        """Grant an app a permission set on a file ("r", "w", or "rw")."""
        if name not in self.files:
            raise UnknownFile(name)
        if isinstance(perms, str):
            perms = frozenset(perms)
        if not perms <= {"r", "w"}:
            raise ValueError(f"permissions must be drawn from 'rw', got {perms!r}")
        self.acl[(app, name)] = frozenset(perms)

    def allowed(self, app: str, name: str, op: str) -> bool:
        return op in self.acl.get((app, name), frozenset())

    def owner_of_block(self, block: int) -> str | None:
        i = bisect_right(self._starts, block) - 1
        if i >= 0:
            start, end, name = self._spans[i]
            if start <= block < end:
                return name
        return None

    def check_range(self, app: str, start_block: int, block_count: int, op: str) -> str:
        """Authorize a block range: 'ok', 'invalid_lba', or 'permission_denied'.

        Every block must fall inside some file's extents (else invalid_lba)
        and every owning file must grant the app the operation.
        """
        block = start_block
        end = start_block + block_count
        if start_block < 0 or end > self.total_blocks:
            return "invalid_lba"
        while block < end:
            i = bisect_right(self._starts, block) - 1
            if i < 0:
                return "invalid_lba"
            s, e, name = self._spans[i]
            if not (s <= block < e):
                return "invalid_lba"
            if not self.allowed(app, name, op):
                return "permission_denied"
            block = min(e, end)
        return "ok"

    def file_to_virtual(self, name: str, byte_offset: int, length: int) -> list[tuple[int, int]]:
        """Map a file-relative byte range to (virtual_byte, length) pieces."""
        if name not in self.files:
            raise UnknownFile(name)
        if byte_offset < 0 or length < 1:
            raise ValueError("bad byte range")
        pieces: list[tuple[int, int]] = []
        remaining = length
        cursor = byte_offset
        for extent in self.files[name]:
            ext_bytes = extent.block_count * self.block_size
            if cursor >= ext_bytes:
                cursor -= ext_bytes
                continue
            take = min(remaining, ext_bytes - cursor)
            pieces.append((extent.start_block * self.block_size + cursor, take))
            remaining -= take
            cursor = 0
            if remaining == 0:
                return pieces
        raise ValueError(f"range [{byte_offset}, +{length}) beyond end of {name!r}")


class VirtualMap:
    """Bijection between the controller's virtual block space and per-SSD
    physical blocks, striping stripe_width consecutive blocks per device."""

    def __init__(self, stripe_width: int, backing_count: int, blocks_per_ssd: int) -> None:
        if stripe_width < 1 or backing_count < 1 or blocks_per_ssd < 1:
            raise ValueError("stripe_width, backing_count, blocks_per_ssd must be >= 1")
        self.stripe_width = stripe_width
        self.backing_count = backing_count
        self.blocks_per_ssd = blocks_per_ssd

    @property
    def virtual_blocks(self) -> int:
        return self.backing_count * self.blocks_per_ssd

    def to_physical(self, vblock: int) -> tuple[int, int]:
        if not (0 <= vblock < self.virtual_blocks):
            raise ValueError(f"virtual block {vblock} out of range")
        stripe, offset = divmod(vblock, self.stripe_width)
        ssd = stripe % self.backing_count
        pblock = (stripe // self.backing_count) * self.stripe_width + offset
        return ssd, pblock

    def to_virtual(self, ssd: int, pblock: int) -> int:
        if not (0 <= ssd < self.backing_count and 0 <= pblock < self.blocks_per_ssd):
            raise ValueError("physical address out of range")
        stripe, offset = divmod(pblock, self.stripe_width)
        return (stripe * self.backing_count + ssd) * self.stripe_width + offset

    def split(self, vblock: int, block_count: int) -> list[tuple[int, int, int]]:
        """Break a virtual range into per-SSD contiguous (ssd, pblock, count)
        runs; a range inside one stripe yields a single run."""
        runs: list[tuple[int, int, int]] = []
        v = vblock
        end = vblock + block_count
        while v < end:
            ssd, pblock = self.to_physical(v)
            stripe_end = (v // self.stripe_width + 1) * self.stripe_width
            take = min(end, stripe_end) - v
            if runs and runs[-1][0] == ssd and runs[-1][1] + runs[-1][2] == pblock:
                runs[-1] = (ssd, runs[-1][1], runs[-1][2] + take)
            else:
                runs.append((ssd, pblock, take))
            v += take
        return runs
