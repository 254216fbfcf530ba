"""NVMe-style command, completion, and queue-pair structures.

The queue pair owns submission and completion rings with wrapping head/tail
indices and a monotone doorbell.  Tags identify in-flight commands within a
queue: a tag is leased at enqueue time and returned when the issuer polls
its completion, so in-flight commands per queue can never exceed the depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

__all__ = ["Opcode", "Status", "NvmeCommand", "NvmeCompletion", "QueuePair", "SubmissionFull"]


class Opcode(IntEnum):
    READ = 0
    WRITE = 1


class Status(IntEnum):
    SUCCESS = 0
    PERMISSION_DENIED = 1
    INVALID_LBA = 2
    DEVICE_ERROR = 3


class SubmissionFull(RuntimeError):
    """The submission ring has no free slot; issuer must back off."""


@dataclass(slots=True)
class NvmeCommand:
    opcode: int
    app_id: str
    queue_id: int
    tag: int
    virtual_lba: int
    length: int
    dest_buffer: int = 0
    issued_at: int = 0
    useful_bytes: int = 0
    thread: int = -1

    def validate(self, block_size: int) -> None:
        if self.length < block_size or self.length % block_size:
            raise ValueError(f"length {self.length} not a positive multiple of {block_size}")
        if self.virtual_lba < 0:
            raise ValueError("virtual_lba must be >= 0")


@dataclass(slots=True)
class NvmeCompletion:
    tag: int
    status: Status
    completed_at: int


class QueuePair:
    """Submission/completion rings of a fixed depth, plus the tag lease pool.

    owner_epu identifies whose controller services the queue; a queue mapped
    into a different EPU's memory still belongs to its owning controller.
    """

    __slots__ = ("queue_id", "depth", "owner_epu", "sq", "cq", "sq_head", "sq_tail",
                 "cq_head", "cq_tail", "doorbell", "_free_tags", "_cq_by_tag")

    def __init__(self, queue_id: int, depth: int, owner_epu: int = 0) -> None:
        if depth < 1:
            raise ValueError("queue depth must be >= 1")
        self.queue_id = queue_id
        self.depth = depth
        self.owner_epu = owner_epu
        self.sq: list[NvmeCommand | None] = [None] * depth
        self.cq: list[NvmeCompletion | None] = [None] * depth
        self.sq_head = 0
        self.sq_tail = 0
        self.cq_head = 0
        self.cq_tail = 0
        self.doorbell = 0  # monotone count of enqueued commands
        self._free_tags = list(range(depth - 1, -1, -1))
        self._cq_by_tag: dict[int, NvmeCompletion] = {}

    @property
    def sq_occupancy(self) -> int:
        return self.sq_tail - self.sq_head

    def try_lease_tag(self) -> int | None:
        return self._free_tags.pop() if self._free_tags else None

    def return_tag(self, tag: int) -> None:
        self._free_tags.append(tag)

    def enqueue(self, cmd: NvmeCommand) -> None:
        """Write a command to the submission ring and advance the doorbell."""
        if self.sq_occupancy >= self.depth:
            raise SubmissionFull(f"queue {self.queue_id} sq full at depth {self.depth}")
        self.sq[self.sq_tail % self.depth] = cmd
        self.sq_tail += 1
        self.doorbell += 1

    def fetch(self) -> NvmeCommand | None:
        """Controller side: consume the next command indicated by the doorbell."""
        if self.sq_head >= self.sq_tail:
            return None
        cmd = self.sq[self.sq_head % self.depth]
        self.sq[self.sq_head % self.depth] = None
        self.sq_head += 1
        return cmd

    def post_completion(self, completion: NvmeCompletion) -> None:
        self.cq[self.cq_tail % self.depth] = completion
        self.cq_tail += 1
        self._cq_by_tag[completion.tag] = completion

    def poll(self, tag: int) -> NvmeCompletion | None:
        """Issuer side: claim the completion matching a tag, freeing it."""
        completion = self._cq_by_tag.pop(tag, None)
        if completion is not None:
            self.cq_head += 1
            self.return_tag(tag)
        return completion
