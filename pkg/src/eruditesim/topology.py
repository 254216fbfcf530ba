"""Shared scenario plumbing: storage stack construction and stream setup.

Both access paths run over the identical storage hardware: the SSD array,
the virtual block map striping across it, the file table with ACLs, and the
host-side data link.  Building them in one place guarantees a compare run
differs only in the path mechanics, never in the devices.
"""

from __future__ import annotations

from dataclasses import dataclass

from .devices import FlashSsd, Link
from .filesystem import FileTable, VirtualMap
from .workloads import AccessStream, build_stream

__all__ = ["Storage", "build_storage"]


@dataclass
class Storage:
    file_table: FileTable
    vmap: VirtualMap
    ssds: list[FlashSsd]
    host_link: Link
    stream: AccessStream
    # single-extent fast path: virtual byte base of the workload file
    workload_base: int | None

    def to_virtual(self, file_offset: int, length: int, name: str) -> list[tuple[int, int]]:
        if self.workload_base is not None:
            return [(self.workload_base + file_offset, length)]
        return self.file_table.file_to_virtual(name, file_offset, length)


def build_storage(scenario, *, audit: bool = False) -> Storage:
    """Instantiate devices, allocate files, grant ACLs, open the stream."""
    block = scenario.block_size
    stream = build_stream(scenario.workload, scenario.seed)

    if scenario.files:
        declared = {f.name: f for f in scenario.files}
        total_bytes = sum(f.size_bytes for f in declared.values())
    else:
        declared = None
        total_bytes = stream.byte_span

    needed_blocks = max(1, -(-total_bytes // block))
    stripe = scenario.erudite.stripe_width
    n = scenario.ssd_count
    per_ssd = -(-needed_blocks // (n * stripe)) * stripe
    vmap = VirtualMap(stripe, n, per_ssd)
    table = FileTable(block_size=block, total_blocks=vmap.virtual_blocks)

    if declared is None:
        table.create_file(scenario.workload.file, stream.byte_span)
        table.set_acl(scenario.workload.app, scenario.workload.file, "rw")
    else:
        for decl in scenario.files:
            table.create_file(decl.name, decl.size_bytes)
            for app, perms in decl.acl:
                table.set_acl(app, decl.name, perms)
        span = stream.byte_span
        file_bytes = sum(e.block_count for e in table.files[scenario.workload.file]) * block
        if span > file_bytes:
            raise ValueError(
                f"workload addresses {span} bytes but file "
                f"{scenario.workload.file!r} holds {file_bytes}"
            )

    extents = table.files[scenario.workload.file]
    base = extents[0].start_block * block if len(extents) == 1 else None

    ssds = [
        FlashSsd(scenario.ssd, ssd_id=i, block_size=block, audit=audit)
        for i in range(n)
    ]
    return Storage(
        file_table=table,
        vmap=vmap,
        ssds=ssds,
        host_link=Link(scenario.host_link),
        stream=stream,
        workload_base=base,
    )
